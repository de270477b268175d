use std::collections::BTreeMap;

use serde::Serialize;

use super::hullmin::{min_max_ratio, HullNormTerm};
use super::TimeConstraints;
use crate::error::{Error, Result};
use crate::hull::{combine, zero_in_hull};
use crate::model::{
    rescale_bases, unstable_subgraph_acyclic, Edge, ImpulseKind, ImpulseSet, Jumps, ModeId, Rescaling,
    ResetCollection, StabilityClass, SwitchedSystemSpec, DEFAULT_XI,
};
use crate::numlin::{operator_norm, real_part, spectral_norm, to_complex, ComplexMatrix, RealMatrix};

/// Jump matrices `M` with `‖P_q⁻¹ M P_p‖ ≤ bound`, zero excluded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibleJumpBall {
    pub source: ModeId,
    pub target: ModeId,
    pub source_class: StabilityClass,
    pub bound: f64,
}

impl AdmissibleJumpBall {
    pub fn contains(&self, spec: &SwitchedSystemSpec, m: &RealMatrix) -> Result<bool> {
        if m.iter().all(|x| *x == 0.0) {
            return Ok(false);
        }
        Ok(transfer_norm(spec, &(self.source.clone(), self.target.clone()), m)? <= self.bound * (1.0 + 1e-12))
    }
}

/// `‖P_q⁻¹ M P_p‖` in the system norm.
pub fn transfer_norm(spec: &SwitchedSystemSpec, edge: &Edge, m: &RealMatrix) -> Result<f64> {
    Ok(operator_norm(&transfer(spec, edge, m)?, &spec.norm))
}

fn transfer(spec: &SwitchedSystemSpec, edge: &Edge, m: &RealMatrix) -> Result<ComplexMatrix> {
    let sp = spec.subsystem(&edge.0)?;
    let sq = spec.subsystem(&edge.1)?;
    Ok(sq.eig.basis_inverse()? * to_complex(m) * sp.basis())
}

/// Ball radius `c_p⁻¹ e^{λ_p* τ}` (stable source) or `c_p⁻¹ e^{-μ_p* η}`
/// (unstable source), with `τ`, `η` read from `constraints`.
pub fn admissible_jump_ball(
    spec: &SwitchedSystemSpec,
    edge: &Edge,
    constraints: &TimeConstraints,
) -> Result<AdmissibleJumpBall> {
    let sp = spec.subsystem(&edge.0)?;
    spec.subsystem(&edge.1)?;
    let bound = match sp.class {
        StabilityClass::Stable => {
            let tau = constraints
                .dwell_for(&sp.id)
                .ok_or_else(|| Error::InvalidArgument(format!("no dwell time for mode {}", sp.id)))?;
            (sp.rate * tau).exp() / sp.c
        }
        StabilityClass::Unstable => {
            let eta = constraints
                .flee_for(&sp.id)
                .ok_or_else(|| Error::InvalidArgument(format!("no flee time for mode {}", sp.id)))?;
            (-sp.rate * eta).exp() / sp.c
        }
        StabilityClass::Marginal => return Err(Error::MarginalMode(sp.id.clone())),
    };
    Ok(AdmissibleJumpBall {
        source: edge.0.clone(),
        target: edge.1.clone(),
        source_class: sp.class,
        bound,
    })
}

/// Resets `R_(p,q) = d_p⁻¹ P_q P_p⁻¹` for every graph edge, each factor
/// `d_p` exceeding `c_p`. When `P_q P_p⁻¹` is not real its real part is
/// used, shrunk so that `‖P_q⁻¹ R P_p‖ ≤ 1/d_p` still holds.
pub fn stabilizing_resets(spec: &SwitchedSystemSpec, d: &BTreeMap<ModeId, f64>) -> Result<ResetCollection> {
    if !spec.all_stable() {
        return Err(Error::NotAllStable);
    }
    let mut out = ResetCollection::new();
    for edge in spec.graph.edges() {
        let sp = spec.subsystem(&edge.0)?;
        let sq = spec.subsystem(&edge.1)?;
        let dp = *d
            .get(&sp.id)
            .ok_or_else(|| Error::InvalidArgument(format!("no scale factor for mode {}", sp.id)))?;
        if !(dp > sp.c) {
            return Err(Error::InvalidArgument(format!(
                "scale factor {dp} for mode {} must exceed c = {}",
                sp.id, sp.c
            )));
        }
        let k = sq.basis() * sp.eig.basis_inverse()?;
        let re = real_part(&k);
        let imag = spectral_norm(&k.map(|z| num_complex::Complex64::new(0.0, z.im)));
        let r = if imag <= 1e-9 * spectral_norm(&k) {
            re / dp
        } else {
            if re.iter().all(|x| *x == 0.0) {
                return Err(Error::ZeroInSet);
            }
            let shrink = transfer_norm(spec, edge, &re)?.max(1.0);
            re / (dp * shrink)
        };
        out.insert(edge.clone(), r);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    /// One matrix per edge.
    Resets,
    /// One matrix shared by every switch.
    Impulses,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpSelection {
    pub tau_star: Option<f64>,
    pub eta_star: Option<f64>,
    /// Chosen matrix per edge (the same matrix on every edge in impulses mode).
    pub selection: BTreeMap<Edge, RealMatrix>,
    /// Spec with the bases used for the bounds.
    pub spec: SwitchedSystemSpec,
    pub rescaling: Option<Rescaling>,
}

/// Pick jump matrices from `candidates` that minimize the dwell-time bound.
///
/// When `eta_min` is given and unstable modes exist, bases are first
/// rescaled with `ε = min_p e^{-μ_p* η_min}`. In resets mode each edge takes
/// its own minimizer; in impulses mode a single matrix serves every edge,
/// found by bisection on `τ` for convex hulls.
pub fn constrained_jump_selection(
    spec: &SwitchedSystemSpec,
    candidates: &ImpulseSet,
    mode: SelectionMode,
    eta_min: Option<f64>,
) -> Result<JumpSelection> {
    if candidates.matrices.is_empty() {
        return Err(Error::InvalidArgument("empty candidate set".into()));
    }
    let has_zero = candidates.matrices.iter().any(|m| m.iter().all(|x| *x == 0.0));
    if has_zero || (candidates.kind == ImpulseKind::ConvexHull && zero_in_hull(&candidates.matrices)) {
        return Err(Error::ZeroInSet);
    }
    if let (false, cycle) = unstable_subgraph_acyclic(spec) {
        return Err(Error::HypothesisViolated(cycle.unwrap_or_default()));
    }
    let mut rescaling = None;
    let mut work = spec.clone();
    let unstable_rates: Vec<f64> = spec
        .subsystems
        .iter()
        .filter(|s| s.class == StabilityClass::Unstable)
        .map(|s| s.rate)
        .collect();
    if let (Some(eta), false) = (eta_min, unstable_rates.is_empty()) {
        let eps = unstable_rates
            .iter()
            .map(|mu| (-mu * eta).exp())
            .fold(f64::INFINITY, f64::min);
        let (scaled, r) = rescale_bases(spec, &Jumps::Impulses(candidates.clone()), eps, DEFAULT_XI)?;
        work = scaled;
        rescaling = Some(r);
    }
    let edges: Vec<Edge> = work.graph.edges().cloned().collect();
    let (tau, eta, selection) = match mode {
        SelectionMode::Resets => per_edge(&work, &edges, candidates)?,
        SelectionMode::Impulses => shared(&work, &edges, candidates, eta_min.unwrap_or(0.0))?,
    };
    Ok(JumpSelection {
        tau_star: tau,
        eta_star: eta,
        selection,
        spec: work,
        rescaling,
    })
}

type Selected = (Option<f64>, Option<f64>, BTreeMap<Edge, RealMatrix>);

fn fold_times(
    spec: &SwitchedSystemSpec,
    logs: &[(Edge, f64)],
) -> Result<(Option<f64>, Option<f64>)> {
    let mut tau: Option<f64> = None;
    let mut eta: Option<f64> = None;
    for (edge, l) in logs {
        let sp = spec.subsystem(&edge.0)?;
        match sp.class {
            StabilityClass::Stable => {
                let v = l / sp.rate;
                tau = Some(tau.map_or(v, |t| t.max(v)));
            }
            StabilityClass::Unstable => {
                if !(*l < 0.0) {
                    return Err(Error::FleeUndefined(edge.0.clone(), edge.1.clone()));
                }
                let v = -l / sp.rate;
                eta = Some(eta.map_or(v, |e| e.min(v)));
            }
            StabilityClass::Marginal => return Err(Error::MarginalMode(sp.id.clone())),
        }
    }
    Ok((tau.map(|t| t.max(0.0)), eta))
}

fn images(spec: &SwitchedSystemSpec, edge: &Edge, set: &ImpulseSet) -> Result<Vec<ComplexMatrix>> {
    set.matrices
        .iter()
        .map(|m| Ok(spec.norm.to_spectral(&transfer(spec, edge, m)?)))
        .collect()
}

fn per_edge(spec: &SwitchedSystemSpec, edges: &[Edge], set: &ImpulseSet) -> Result<Selected> {
    let mut logs = Vec::new();
    let mut selection = BTreeMap::new();
    for edge in edges {
        let c = spec.subsystem(&edge.0)?.c;
        let imgs = images(spec, edge, set)?;
        let (value, m) = match set.kind {
            ImpulseKind::Finite => {
                let mut best = (f64::INFINITY, 0);
                for (i, k) in imgs.iter().enumerate() {
                    let v = spectral_norm(k);
                    if v < best.0 {
                        best = (v, i);
                    }
                }
                (best.0, set.matrices[best.1].clone())
            }
            ImpulseKind::ConvexHull => {
                let (v, w) = min_max_ratio(&[HullNormTerm { images: imgs, bound: 1.0 }])?;
                (v, combine(&set.matrices, &w))
            }
        };
        logs.push((edge.clone(), (c * value).ln()));
        selection.insert(edge.clone(), m);
    }
    let (tau, eta) = fold_times(spec, &logs)?;
    Ok((tau, eta, selection))
}

fn shared(spec: &SwitchedSystemSpec, edges: &[Edge], set: &ImpulseSet, eta_min: f64) -> Result<Selected> {
    let evaluate = |m: &RealMatrix| -> Result<Vec<(Edge, f64)>> {
        edges
            .iter()
            .map(|e| Ok((e.clone(), (spec.subsystem(&e.0)?.c * transfer_norm(spec, e, m)?).ln())))
            .collect()
    };
    // Best single member: smallest τ among those meeting the flee floor.
    let mut best: Option<(f64, RealMatrix)> = None;
    for m in &set.matrices {
        let logs = evaluate(m)?;
        if let Ok((tau, eta)) = fold_times(spec, &logs) {
            if eta.is_none_or(|e| e >= eta_min) {
                let t = tau.unwrap_or(0.0);
                if best.as_ref().is_none_or(|(b, _)| t < *b) {
                    best = Some((t, m.clone()));
                }
            }
        }
    }
    if set.kind == ImpulseKind::ConvexHull && set.matrices.len() > 1 {
        let edge_images: Vec<(Edge, Vec<ComplexMatrix>)> = edges
            .iter()
            .map(|e| Ok((e.clone(), images(spec, e, set)?)))
            .collect::<Result<_>>()?;
        let feasible = |tau: f64| -> Result<Option<Vec<f64>>> {
            let mut terms = Vec::new();
            for (e, imgs) in &edge_images {
                let sp = spec.subsystem(&e.0)?;
                let bound = match sp.class {
                    StabilityClass::Stable => (sp.rate * tau).exp() / sp.c,
                    _ => (-sp.rate * eta_min).exp() / sp.c,
                };
                terms.push(HullNormTerm {
                    images: imgs.clone(),
                    bound,
                });
            }
            let (r, w) = min_max_ratio(&terms)?;
            Ok((r <= 1.0).then_some(w))
        };
        let hi = best.as_ref().map_or(
            spec.subsystems
                .iter()
                .map(|s| 50.0 / s.rate.max(1e-6))
                .fold(0.0, f64::max),
            |(t, _)| *t,
        );
        if let Some(w0) = feasible(0.0)? {
            best = Some((0.0, combine(&set.matrices, &w0)));
        } else if let Some(mut w) = feasible(hi)? {
            let (mut lo, mut up) = (0.0, hi);
            while up - lo > 1e-7 * hi.max(1.0) {
                let mid = 0.5 * (lo + up);
                match feasible(mid)? {
                    Some(wm) => {
                        up = mid;
                        w = wm;
                    }
                    None => lo = mid,
                }
            }
            let m = combine(&set.matrices, &w);
            let logs = evaluate(&m)?;
            let (tau, _) = fold_times(spec, &logs)?;
            let t = tau.unwrap_or(0.0);
            if best.as_ref().is_none_or(|(b, _)| t < *b) {
                best = Some((t, m));
            }
        }
    }
    let (_, m) = best.ok_or_else(|| {
        Error::InvalidArgument("no candidate meets the flee-time floor on every unstable edge".into())
    })?;
    let (tau, eta) = fold_times(spec, &evaluate(&m)?)?;
    let selection = edges.iter().map(|e| (e.clone(), m.clone())).collect();
    Ok((tau, eta, selection))
}
