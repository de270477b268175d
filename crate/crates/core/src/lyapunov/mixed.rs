use std::collections::BTreeMap;

use serde::Serialize;

use super::build::{build_lmi_system, RateParams, Template, TemplateParams};
use super::search::{feasibility_search, SearchOptions};
use super::LyapunovCertificate;
use crate::error::{Error, Result};
use crate::model::{ModeId, SwitchedSystemSpec};

/// First `(λ, μ, γ)` tried by [`mixed_rate_search`].
pub const MIXED_SEED: (f64, f64, f64) = (1.0, 2.0, 75.0);

const RATIO_TOL: f64 = 1e-12;

fn check_ratios(ratios: &[f64]) -> Result<()> {
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| !(-RATIO_TOL..=1.0 + RATIO_TOL).contains(r)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::RatioInvalid(format!("ratios {ratios:?} must lie in [0, 1] and sum to 1")));
    }
    Ok(())
}

/// `-λ r_s τ + μ r_u η + ln γ < 0` for scalar constants.
pub fn mixed_rate_condition(lambda: f64, mu: f64, gamma: f64, r_s: f64, r_u: f64, tau: f64, eta: f64) -> Result<bool> {
    check_ratios(&[r_s, r_u])?;
    let stable = if r_s > 0.0 { lambda * r_s * tau } else { 0.0 };
    let unstable = if r_u > 0.0 { mu * r_u * eta } else { 0.0 };
    Ok(-stable + unstable + gamma.ln() < 0.0)
}

/// Limsup rate condition with `λ = min λ_p`, `μ = max μ_p`, `γ = max γ`
/// taken from `cert`. Missing constants are only allowed when their ratio
/// is zero; a certificate without `γ` entries uses `γ = 1`.
pub fn mixed_rate_check(cert: &LyapunovCertificate, r_s: f64, r_u: f64, tau: f64, eta: f64) -> Result<bool> {
    check_ratios(&[r_s, r_u])?;
    let lambda = match cert.lambda_min() {
        Some(l) => l,
        None if r_s <= RATIO_TOL => 0.0,
        None => return Err(Error::InvalidArgument("certificate has no lambda for stable switches".into())),
    };
    let mu = match cert.mu_max() {
        Some(m) => m,
        None if r_u <= RATIO_TOL => 0.0,
        None => return Err(Error::InvalidArgument("certificate has no mu for unstable switches".into())),
    };
    mixed_rate_condition(lambda, mu, cert.gamma_max().unwrap_or(1.0), r_s, r_u, tau, eta)
}

/// Per-mode form `-Σ λ_p r_p τ_p + Σ μ_p r_p η_p + ln γ < 0`. `ratios` are
/// switch frequencies into each mode and must sum to one; stable modes read
/// `dwell`, unstable modes read `flee`.
pub fn mixed_rate_check_mode_dependent(
    cert: &LyapunovCertificate,
    ratios: &BTreeMap<ModeId, f64>,
    dwell: &BTreeMap<ModeId, f64>,
    flee: &BTreeMap<ModeId, f64>,
) -> Result<bool> {
    check_ratios(&ratios.values().copied().collect::<Vec<_>>())?;
    let mut total = cert.gamma_max().unwrap_or(1.0).ln();
    for (mode, &r) in ratios {
        if r <= 0.0 {
            continue;
        }
        if let Some(l) = cert.lambda.get(mode) {
            let tau = dwell
                .get(mode)
                .ok_or_else(|| Error::InvalidArgument(format!("no dwell time for mode {mode}")))?;
            total -= l * r * tau;
        } else if let Some(m) = cert.mu.get(mode) {
            let eta = flee
                .get(mode)
                .ok_or_else(|| Error::InvalidArgument(format!("no flee time for mode {mode}")))?;
            total += m * r * eta;
        } else {
            return Err(Error::UnknownMode(mode.clone()));
        }
    }
    Ok(total < 0.0)
}

/// `τ > slope·η + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DwellFleeRelation {
    pub slope: f64,
    pub offset: f64,
}

impl DwellFleeRelation {
    pub fn holds(&self, tau: f64, eta: f64) -> bool {
        tau > self.slope * eta + self.offset
    }

    /// Infimum of admissible dwell times for a given flee time.
    pub fn min_dwell(&self, eta: f64) -> f64 {
        self.slope * eta + self.offset
    }
}

/// Dwell/flee relation implied by the rate condition for signals whose
/// switches split with frequencies `r_s`, `r_u` (both positive).
pub fn alternating_relation(lambda: f64, mu: f64, gamma: f64, r_s: f64, r_u: f64) -> Result<DwellFleeRelation> {
    check_ratios(&[r_s, r_u])?;
    if r_s <= 0.0 || lambda <= 0.0 {
        return Err(Error::RatioInvalid("the relation needs r_s > 0 and lambda > 0".into()));
    }
    Ok(DwellFleeRelation {
        slope: mu * r_u / (lambda * r_s),
        offset: gamma.ln() / (lambda * r_s),
    })
}

#[derive(Debug, Clone)]
pub struct MixedRateResult {
    pub lambda: f64,
    pub mu: f64,
    pub gamma: f64,
    pub certificate: LyapunovCertificate,
    /// Relation for alternating signals (`r_s = r_u = 1/2`).
    pub relation: DwellFleeRelation,
    /// Triples tried, including the successful one.
    pub tried: usize,
}

fn grid() -> Vec<(f64, f64, f64)> {
    let mut out = vec![MIXED_SEED];
    for &l in &[1.0, 0.5, 0.25, 0.1] {
        for &m in &[2.0, 4.0, 8.0, 16.0] {
            for &g in &[75.0, 300.0, 1e3, 1e4] {
                if (l, m, g) != MIXED_SEED {
                    out.push((l, m, g));
                }
            }
        }
    }
    out
}

/// First `(λ, μ, γ)` on a coarse grid (seeded with [`MIXED_SEED`]) for which
/// the rate-form LMIs admit a certificate.
pub fn mixed_rate_search(spec: &SwitchedSystemSpec, opts: &SearchOptions) -> Result<Option<MixedRateResult>> {
    mixed_rate_search_over(spec, &grid(), opts)
}

/// As [`mixed_rate_search`] over caller-supplied triples.
pub fn mixed_rate_search_over(
    spec: &SwitchedSystemSpec,
    triples: &[(f64, f64, f64)],
    opts: &SearchOptions,
) -> Result<Option<MixedRateResult>> {
    for (i, &(lambda, mu, gamma)) in triples.iter().enumerate() {
        let rate = RateParams::uniform(spec, lambda, mu, gamma);
        let lmis = build_lmi_system(spec, Template::MixedRate, &TemplateParams::Rate(rate.clone()))?;
        let out = feasibility_search(&lmis, opts)?;
        if let Some(mut cert) = out.certificate {
            cert.lambda = rate.lambda;
            cert.mu = rate.mu;
            cert.gamma = spec.graph.edges().map(|e| (e.clone(), gamma)).collect();
            return Ok(Some(MixedRateResult {
                lambda,
                mu,
                gamma,
                certificate: cert,
                relation: alternating_relation(lambda, mu, gamma, 0.5, 0.5)?,
                tried: i + 1,
            }));
        }
    }
    Ok(None)
}
