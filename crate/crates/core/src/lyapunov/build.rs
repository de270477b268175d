use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{ConstraintKind, LmiConstraint, LmiSystem, Term};
use crate::error::{Error, Result};
use crate::model::{Edge, Jumps, ModeId, StabilityClass, SwitchedSystemSpec};
use crate::numlin::{matrix_exp, RealMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Template {
    /// `QA + AᵀQ ≺ 0`, `e^{A_qᵀτ} Rᵀ Q_p R e^{A_q τ} ≼ Q_q` per edge `(q, p)`.
    ResetDwell,
    /// As `ResetDwell` with every impulse (hull vertex) in place of `R`.
    ImpulseDwell,
    /// Dwell-time conditions without jumps.
    GeromelColaneri,
    /// `QA + AᵀQ ≺ 0`, `Rᵀ Q_p R ≼ Q_q` per edge `(q, p)`.
    HespanhaMorse,
    /// `QA + AᵀQ ≼ -λ Q` (stable), `≼ μ Q` (unstable), `Rᵀ Q_q R ≼ γ Q_p`.
    MixedRate,
}

impl Template {
    pub const ALL: [Template; 5] = [
        Template::ResetDwell,
        Template::ImpulseDwell,
        Template::GeromelColaneri,
        Template::HespanhaMorse,
        Template::MixedRate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Template::ResetDwell => "reset-dwell",
            Template::ImpulseDwell => "impulse-dwell",
            Template::GeromelColaneri => "geromel-colaneri",
            Template::HespanhaMorse => "hespanha-morse",
            Template::MixedRate => "mixed-rate",
        }
    }

    /// Whether the template is parametrized by a dwell time.
    pub fn uses_dwell(self) -> bool {
        matches!(
            self,
            Template::ResetDwell | Template::ImpulseDwell | Template::GeromelColaneri
        )
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Template {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Template::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown template {s:?}")))
    }
}

/// Dwell time shared by all modes or set per mode.
#[derive(Debug, Clone, PartialEq)]
pub enum DwellParams {
    Uniform(f64),
    PerMode(BTreeMap<ModeId, f64>),
}

impl DwellParams {
    pub fn tau_for(&self, mode: &ModeId) -> Result<f64> {
        match self {
            DwellParams::Uniform(t) => Ok(*t),
            DwellParams::PerMode(m) => m
                .get(mode)
                .copied()
                .ok_or_else(|| Error::InvalidArgument(format!("no dwell time for mode {mode}"))),
        }
    }

    /// Same shape with every value multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        match self {
            DwellParams::Uniform(t) => DwellParams::Uniform(t * s),
            DwellParams::PerMode(m) => DwellParams::PerMode(m.iter().map(|(k, v)| (k.clone(), v * s)).collect()),
        }
    }
}

/// Rate constants for the mixed template.
#[derive(Debug, Clone, PartialEq)]
pub struct RateParams {
    pub lambda: BTreeMap<ModeId, f64>,
    pub mu: BTreeMap<ModeId, f64>,
    pub gamma: f64,
}

impl RateParams {
    /// One `λ` for every stable mode and one `μ` for every unstable mode.
    pub fn uniform(spec: &SwitchedSystemSpec, lambda: f64, mu: f64, gamma: f64) -> Self {
        let mut l = BTreeMap::new();
        let mut m = BTreeMap::new();
        for s in &spec.subsystems {
            match s.class {
                StabilityClass::Stable => {
                    l.insert(s.id.clone(), lambda);
                }
                _ => {
                    m.insert(s.id.clone(), mu);
                }
            }
        }
        RateParams {
            lambda: l,
            mu: m,
            gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TemplateParams {
    None,
    Dwell(DwellParams),
    Rate(RateParams),
}

fn decay_margin(a: &RealMatrix) -> f64 {
    1e-6 * a.singular_values().max().max(1.0)
}

fn pd_constraints(spec: &SwitchedSystemSpec, n: usize) -> Vec<LmiConstraint> {
    spec.subsystems
        .iter()
        .map(|s| LmiConstraint {
            label: format!("Q_{} > 0", s.id),
            kind: ConstraintKind::PositiveDefinite,
            terms: vec![Term::Congruence {
                mode: s.id.clone(),
                f: RealMatrix::identity(n, n),
                coef: -1.0,
            }],
            strict: true,
            margin: 1e-6,
        })
        .collect()
}

fn decay_constraints(spec: &SwitchedSystemSpec) -> Vec<LmiConstraint> {
    spec.subsystems
        .iter()
        .map(|s| LmiConstraint {
            label: format!("decay {}", s.id),
            kind: ConstraintKind::Decay,
            terms: vec![Term::Lyapunov {
                mode: s.id.clone(),
                a: s.a.clone(),
                coef: 1.0,
            }],
            strict: true,
            margin: decay_margin(&s.a),
        })
        .collect()
}

/// Jump matrices for `edge` with labels.
fn jump_matrices(spec: &SwitchedSystemSpec, edge: &Edge) -> Result<Vec<(String, RealMatrix)>> {
    match &spec.jumps {
        Jumps::Resets(r) => {
            let m = r
                .get(edge)
                .ok_or_else(|| Error::MissingReset(edge.0.clone(), edge.1.clone()))?;
            Ok(vec![(format!("R({},{})", edge.0, edge.1), m.clone())])
        }
        Jumps::Impulses(set) => Ok(set
            .matrices
            .iter()
            .enumerate()
            .map(|(i, m)| (format!("M{}", i + 1), m.clone()))
            .collect()),
    }
}

/// `Fᵀ Q_to F - Q_from ≼ 0` with `F = jump · e^{A_from τ_from}`.
fn dwell_jump(
    spec: &SwitchedSystemSpec,
    edge: &Edge,
    label: String,
    jump: Option<&RealMatrix>,
    tau: f64,
) -> Result<LmiConstraint> {
    let from = spec.subsystem(&edge.0)?;
    let n = from.dim();
    let flow = matrix_exp(&from.a, tau)?;
    let f = match jump {
        Some(j) => j * flow,
        None => flow,
    };
    Ok(LmiConstraint {
        label,
        kind: ConstraintKind::Jump,
        terms: vec![
            Term::Congruence {
                mode: edge.1.clone(),
                f,
                coef: 1.0,
            },
            Term::Congruence {
                mode: edge.0.clone(),
                f: RealMatrix::identity(n, n),
                coef: -1.0,
            },
        ],
        strict: false,
        margin: 0.0,
    })
}

/// Instantiate `template` for `spec`.
///
/// Dwell templates take [`TemplateParams::Dwell`]; the mixed template takes
/// [`TemplateParams::Rate`]. Every system ends with one positive
/// definiteness constraint per mode. For impulse sets the jump constraints
/// use each member (hull vertex) on each graph edge.
pub fn build_lmi_system(
    spec: &SwitchedSystemSpec,
    template: Template,
    params: &TemplateParams,
) -> Result<LmiSystem> {
    let n = spec.dim();
    let edges: Vec<Edge> = spec.graph.edges().cloned().collect();
    let mut constraints = Vec::new();
    match template {
        Template::ResetDwell | Template::ImpulseDwell | Template::GeromelColaneri => {
            let dwell = match params {
                TemplateParams::Dwell(d) => d,
                _ => return Err(Error::InvalidArgument(format!("template {template} needs dwell times"))),
            };
            match (template, &spec.jumps) {
                (Template::ResetDwell, Jumps::Impulses(_)) => {
                    return Err(Error::InvalidArgument("reset-dwell needs a system with resets".into()))
                }
                (Template::ImpulseDwell, Jumps::Resets(_)) => {
                    return Err(Error::InvalidArgument("impulse-dwell needs a system with impulses".into()))
                }
                _ => {}
            }
            constraints.extend(decay_constraints(spec));
            for edge in &edges {
                let tau = dwell.tau_for(&edge.0)?;
                if template == Template::GeromelColaneri {
                    let label = format!("dwell {} -> {}", edge.0, edge.1);
                    constraints.push(dwell_jump(spec, edge, label, None, tau)?);
                } else {
                    for (name, m) in jump_matrices(spec, edge)? {
                        let label = format!("dwell {} -> {} via {name}", edge.0, edge.1);
                        constraints.push(dwell_jump(spec, edge, label, Some(&m), tau)?);
                    }
                }
            }
        }
        Template::HespanhaMorse => {
            constraints.extend(decay_constraints(spec));
            for edge in &edges {
                for (name, m) in jump_matrices(spec, edge)? {
                    let label = format!("jump {} -> {} via {name}", edge.0, edge.1);
                    let mut c = dwell_jump(spec, edge, label, Some(&m), 0.0)?;
                    // e^{A·0} = I exactly.
                    if let Term::Congruence { f, .. } = &mut c.terms[0] {
                        *f = m.clone();
                    }
                    constraints.push(c);
                }
            }
        }
        Template::MixedRate => {
            let rate = match params {
                TemplateParams::Rate(r) => r,
                _ => return Err(Error::InvalidArgument("mixed-rate template needs rate constants".into())),
            };
            for s in &spec.subsystems {
                let coef = match s.class {
                    StabilityClass::Stable => *rate
                        .lambda
                        .get(&s.id)
                        .ok_or_else(|| Error::InvalidArgument(format!("no lambda for mode {}", s.id)))?,
                    _ => -*rate
                        .mu
                        .get(&s.id)
                        .ok_or_else(|| Error::InvalidArgument(format!("no mu for mode {}", s.id)))?,
                };
                constraints.push(LmiConstraint {
                    label: format!("rate {}", s.id),
                    kind: ConstraintKind::Rate,
                    terms: vec![
                        Term::Lyapunov {
                            mode: s.id.clone(),
                            a: s.a.clone(),
                            coef: 1.0,
                        },
                        Term::Congruence {
                            mode: s.id.clone(),
                            f: RealMatrix::identity(n, n),
                            coef,
                        },
                    ],
                    strict: false,
                    margin: 0.0,
                });
            }
            for edge in &edges {
                for (name, m) in jump_matrices(spec, edge)? {
                    constraints.push(LmiConstraint {
                        label: format!("jump-rate {} -> {} via {name}", edge.0, edge.1),
                        kind: ConstraintKind::JumpRate,
                        terms: vec![
                            Term::Congruence {
                                mode: edge.1.clone(),
                                f: m,
                                coef: 1.0,
                            },
                            Term::Congruence {
                                mode: edge.0.clone(),
                                f: RealMatrix::identity(n, n),
                                coef: -rate.gamma,
                            },
                        ],
                        strict: false,
                        margin: 0.0,
                    });
                }
            }
        }
    }
    constraints.extend(pd_constraints(spec, n));
    Ok(LmiSystem {
        template,
        modes: spec.subsystems.iter().map(|s| s.id.clone()).collect(),
        dim: n,
        constraints,
    })
}
