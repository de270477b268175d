use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Edge, Jumps, ModeId, StabilityClass, SwitchedSystemSpec};
use crate::numlin::{operator_norm, to_complex};
use crate::par::Execution;

/// Dwell times for stable modes and flee times for unstable modes.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeConstraints {
    /// `None` when no edge leaves a mode of that class.
    Uniform { dwell: Option<f64>, flee: Option<f64> },
    ModeDependent {
        dwell: BTreeMap<ModeId, f64>,
        flee: BTreeMap<ModeId, f64>,
    },
}

impl TimeConstraints {
    pub fn dwell_for(&self, mode: &ModeId) -> Option<f64> {
        match self {
            TimeConstraints::Uniform { dwell, .. } => *dwell,
            TimeConstraints::ModeDependent { dwell, .. } => dwell.get(mode).copied(),
        }
    }

    pub fn flee_for(&self, mode: &ModeId) -> Option<f64> {
        match self {
            TimeConstraints::Uniform { flee, .. } => *flee,
            TimeConstraints::ModeDependent { flee, .. } => flee.get(mode).copied(),
        }
    }

    /// Largest dwell time over modes.
    pub fn max_dwell(&self) -> Option<f64> {
        match self {
            TimeConstraints::Uniform { dwell, .. } => *dwell,
            TimeConstraints::ModeDependent { dwell, .. } => dwell.values().copied().reduce(f64::max),
        }
    }

    /// Smallest flee time over modes.
    pub fn min_flee(&self) -> Option<f64> {
        match self {
            TimeConstraints::Uniform { flee, .. } => *flee,
            TimeConstraints::ModeDependent { flee, .. } => flee.values().copied().reduce(f64::min),
        }
    }
}

/// `ln(c_p · max_M ‖P_q⁻¹ M P_p‖)` for one edge, maximized over the jump
/// matrices the edge can use (hull vertices for convex impulse sets).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeTerm {
    pub edge: Edge,
    pub class: StabilityClass,
    pub log_norm: f64,
    /// Index of the maximizing matrix among the candidates.
    pub worst: usize,
}

impl EdgeTerm {
    /// Time bound contributed by this edge: `log_norm / λ*` for stable
    /// sources, `-log_norm / μ*` for unstable ones.
    pub fn time(&self, rate: f64) -> f64 {
        match self.class {
            StabilityClass::Unstable => -self.log_norm / rate,
            _ => self.log_norm / rate,
        }
    }
}

pub fn edge_terms(spec: &SwitchedSystemSpec, exec: Execution) -> Result<Vec<EdgeTerm>> {
    let edges: Vec<Edge> = spec.graph.edges().cloned().collect();
    exec.map(&edges, |edge| edge_term(spec, edge)).into_iter().collect()
}

fn edge_term(spec: &SwitchedSystemSpec, edge: &Edge) -> Result<EdgeTerm> {
    let sp = spec.subsystem(&edge.0)?;
    let sq = spec.subsystem(&edge.1)?;
    if sp.class == StabilityClass::Marginal {
        return Err(Error::MarginalMode(sp.id.clone()));
    }
    let candidates = spec.jumps.candidates(edge);
    if candidates.is_empty() {
        return Err(Error::MissingReset(edge.0.clone(), edge.1.clone()));
    }
    let q_inv = sq.eig.basis_inverse()?;
    let mut worst = 0;
    let mut max = f64::NEG_INFINITY;
    for (i, m) in candidates.iter().enumerate() {
        let k = &q_inv * to_complex(m) * sp.basis();
        let v = operator_norm(&k, &spec.norm);
        if v > max {
            max = v;
            worst = i;
        }
    }
    Ok(EdgeTerm {
        edge: edge.clone(),
        class: sp.class,
        log_norm: (sp.c * max).ln(),
        worst,
    })
}

fn rate_of(spec: &SwitchedSystemSpec, m: &ModeId) -> Result<f64> {
    Ok(spec.subsystem(m)?.rate)
}

fn check_flee(t: &EdgeTerm) -> Result<()> {
    if t.class == StabilityClass::Unstable && !(t.log_norm < 0.0) {
        return Err(Error::FleeUndefined(t.edge.0.clone(), t.edge.1.clone()));
    }
    Ok(())
}

fn uniform(spec: &SwitchedSystemSpec, terms: &[EdgeTerm]) -> Result<TimeConstraints> {
    let mut dwell: Option<f64> = None;
    let mut flee: Option<f64> = None;
    for t in terms {
        check_flee(t)?;
        let v = t.time(rate_of(spec, &t.edge.0)?);
        match t.class {
            StabilityClass::Stable => dwell = Some(dwell.map_or(v, |d| d.max(v))),
            _ => flee = Some(flee.map_or(v, |f| f.min(v))),
        }
    }
    Ok(TimeConstraints::Uniform {
        dwell: dwell.map(|d| d.max(0.0)),
        flee,
    })
}

fn mode_dependent(spec: &SwitchedSystemSpec, terms: &[EdgeTerm]) -> Result<TimeConstraints> {
    let mut dwell: BTreeMap<ModeId, f64> = BTreeMap::new();
    let mut flee: BTreeMap<ModeId, f64> = BTreeMap::new();
    for t in terms {
        check_flee(t)?;
        let p = &t.edge.0;
        let v = t.time(rate_of(spec, p)?);
        match t.class {
            StabilityClass::Stable => {
                let e = dwell.entry(p.clone()).or_insert(f64::NEG_INFINITY);
                *e = e.max(v);
            }
            _ => {
                let e = flee.entry(p.clone()).or_insert(f64::INFINITY);
                *e = e.min(v);
            }
        }
    }
    dwell.values_mut().for_each(|d| *d = d.max(0.0));
    Ok(TimeConstraints::ModeDependent { dwell, flee })
}

fn require_resets(spec: &SwitchedSystemSpec) -> Result<()> {
    match spec.jumps {
        Jumps::Resets(_) => Ok(()),
        Jumps::Impulses(_) => Err(Error::InvalidArgument("system has impulses, not resets".into())),
    }
}

fn require_impulses(spec: &SwitchedSystemSpec) -> Result<()> {
    match spec.jumps {
        Jumps::Impulses(_) => Ok(()),
        Jumps::Resets(_) => Err(Error::InvalidArgument("system has resets, not impulses".into())),
    }
}

/// Uniform dwell time `τ_R` over edges leaving stable modes (clamped at
/// zero) and flee time `η_R` over edges leaving unstable modes.
pub fn flow_dwell_flee(spec: &SwitchedSystemSpec) -> Result<TimeConstraints> {
    require_resets(spec)?;
    uniform(spec, &edge_terms(spec, Execution::default())?)
}

/// Per-mode `τ_p`, `η_p` from each mode's outgoing edges.
pub fn flow_dwell_flee_mode_dependent(spec: &SwitchedSystemSpec) -> Result<TimeConstraints> {
    require_resets(spec)?;
    mode_dependent(spec, &edge_terms(spec, Execution::default())?)
}

/// Uniform bounds `τ_I`, `η_I` valid for every impulse in the set. For a
/// convex hull only the vertices are evaluated.
pub fn flow_dwell_flee_impulsive(spec: &SwitchedSystemSpec) -> Result<TimeConstraints> {
    require_impulses(spec)?;
    uniform(spec, &edge_terms(spec, Execution::default())?)
}

pub fn flow_dwell_flee_impulsive_mode_dependent(spec: &SwitchedSystemSpec) -> Result<TimeConstraints> {
    require_impulses(spec)?;
    mode_dependent(spec, &edge_terms(spec, Execution::default())?)
}

/// Either jump kind, with an explicit execution mode.
pub fn flow_bounds_with(spec: &SwitchedSystemSpec, per_mode: bool, exec: Execution) -> Result<TimeConstraints> {
    let terms = edge_terms(spec, exec)?;
    if per_mode {
        mode_dependent(spec, &terms)
    } else {
        uniform(spec, &terms)
    }
}
