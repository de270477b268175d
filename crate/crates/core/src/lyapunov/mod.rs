//! Multiple-Lyapunov-function certificates.
//!
//! An [`LmiSystem`] lists matrix inequalities `S(Q) ≼ 0` (or `≺ 0`) that are
//! affine in per-mode symmetric unknowns `Q_p`. [`build_lmi_system`]
//! instantiates the dwell-time, impulse, arbitrary-switching and mixed-rate
//! templates; [`feasibility_search`] looks for a certificate and
//! [`verify_certificate`] re-checks one by eigenvalues.

mod build;
mod mixed;
mod search;

pub use build::{build_lmi_system, DwellParams, RateParams, Template, TemplateParams};
pub use mixed::{
    alternating_relation, mixed_rate_check, mixed_rate_check_mode_dependent, mixed_rate_condition, mixed_rate_search,
    mixed_rate_search_over, DwellFleeRelation, MixedRateResult, MIXED_SEED,
};
pub use search::{
    feasibility_search, hespanha_morse_check, min_dwell_bisection, DwellSearch, SearchOptions, SearchOutcome,
};

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Edge, ModeId};
use crate::numlin::{max_eigenvalue_sym, RealMatrix};

/// One affine piece of a constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// `coef · Fᵀ Q_mode F`.
    Congruence { mode: ModeId, f: RealMatrix, coef: f64 },
    /// `coef · (Q_mode A + Aᵀ Q_mode)`.
    Lyapunov { mode: ModeId, a: RealMatrix, coef: f64 },
}

impl Term {
    pub fn mode(&self) -> &ModeId {
        match self {
            Term::Congruence { mode, .. } | Term::Lyapunov { mode, .. } => mode,
        }
    }

    pub fn eval(&self, q: &RealMatrix) -> RealMatrix {
        match self {
            Term::Congruence { f, coef, .. } => f.transpose() * q * f * *coef,
            Term::Lyapunov { a, coef, .. } => (q * a + a.transpose() * q) * *coef,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Decay,
    Jump,
    Rate,
    JumpRate,
    PositiveDefinite,
}

/// `Σ terms ≺ 0` when `strict`, else `Σ terms ≼ 0`. Strict constraints are
/// searched with `≼ -margin·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiConstraint {
    pub label: String,
    pub kind: ConstraintKind,
    pub terms: Vec<Term>,
    pub strict: bool,
    pub margin: f64,
}

impl LmiConstraint {
    pub fn eval(&self, q: &BTreeMap<ModeId, RealMatrix>) -> Result<RealMatrix> {
        let mut s: Option<RealMatrix> = None;
        for t in &self.terms {
            let qm = q
                .get(t.mode())
                .ok_or_else(|| Error::DimensionMismatch(format!("certificate has no matrix for mode {}", t.mode())))?;
            let v = t.eval(qm);
            s = Some(match s {
                None => v,
                Some(acc) => {
                    if acc.shape() != v.shape() {
                        return Err(Error::DimensionMismatch(format!("constraint {} mixes shapes", self.label)));
                    }
                    acc + v
                }
            });
        }
        s.ok_or_else(|| Error::InvalidArgument(format!("constraint {} has no terms", self.label)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmiSystem {
    pub template: Template,
    pub modes: Vec<ModeId>,
    pub dim: usize,
    pub constraints: Vec<LmiConstraint>,
}

impl LmiSystem {
    pub fn count(&self, kind: ConstraintKind) -> usize {
        self.constraints.iter().filter(|c| c.kind == kind).count()
    }
}

/// Per-mode `Q_p` with the rate constants the certificate was built for.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LyapunovCertificate {
    pub q: BTreeMap<ModeId, RealMatrix>,
    pub lambda: BTreeMap<ModeId, f64>,
    pub mu: BTreeMap<ModeId, f64>,
    pub gamma: BTreeMap<Edge, f64>,
}

impl LyapunovCertificate {
    /// `min_p λ_p`.
    pub fn lambda_min(&self) -> Option<f64> {
        self.lambda.values().copied().reduce(f64::min)
    }

    /// `max_p μ_p`.
    pub fn mu_max(&self) -> Option<f64> {
        self.mu.values().copied().reduce(f64::max)
    }

    /// `max γ_(p,q)`.
    pub fn gamma_max(&self) -> Option<f64> {
        self.gamma.values().copied().reduce(f64::max)
    }

    /// `V_p(x) = xᵀ Q_p x`.
    pub fn value(&self, mode: &ModeId, x: &crate::numlin::RealVector) -> Result<f64> {
        let q = self.q.get(mode).ok_or_else(|| Error::UnknownMode(mode.clone()))?;
        Ok(x.dot(&(q * x)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Slack {
    pub label: String,
    pub kind: ConstraintKind,
    pub strict: bool,
    /// Largest eigenvalue of the constraint matrix.
    pub max_eigenvalue: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification {
    pub ok: bool,
    pub slacks: Vec<Slack>,
}

/// Eigenvalue check of every constraint. Nonstrict constraints pass when
/// `λ_max ≤ tolerance`; strict ones need `λ_max < 0`. Every `Q_p` must be
/// positive definite.
pub fn verify_certificate(cert: &LyapunovCertificate, lmis: &LmiSystem, tolerance: f64) -> Result<Verification> {
    for m in &lmis.modes {
        let q = cert
            .q
            .get(m)
            .ok_or_else(|| Error::DimensionMismatch(format!("certificate has no matrix for mode {m}")))?;
        if q.nrows() != lmis.dim || q.ncols() != lmis.dim {
            return Err(Error::DimensionMismatch(format!(
                "Q for mode {m} is {}x{}, expected {}x{}",
                q.nrows(),
                q.ncols(),
                lmis.dim,
                lmis.dim
            )));
        }
    }
    let mut slacks = Vec::with_capacity(lmis.constraints.len());
    for c in &lmis.constraints {
        let s = c.eval(&cert.q)?;
        let v = max_eigenvalue_sym(&s);
        let satisfied = if c.strict { v < 0.0 } else { v <= tolerance };
        slacks.push(Slack {
            label: c.label.clone(),
            kind: c.kind,
            strict: c.strict,
            max_eigenvalue: v,
            satisfied,
        });
    }
    let pd = cert.q.values().all(|q| crate::numlin::is_positive_definite(q, 0.0));
    Ok(Verification {
        ok: pd && slacks.iter().all(|s| s.satisfied),
        slacks,
    })
}
