use std::collections::BTreeMap;

use super::build::{build_lmi_system, DwellParams, Template, TemplateParams};
use super::{verify_certificate, LmiSystem, LyapunovCertificate, Verification};
use crate::error::{Error, Result};
use crate::model::{ModeId, SwitchedSystemSpec};
use crate::numlin::{min_eigenvalue_sym, RealMatrix, RealVector};
use crate::par::Execution;
use crate::sdp::{maximize, sym_basis, sym_from_vars, BarrierOptions, LmiBlock, Program};

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub barrier: BarrierOptions,
    /// Accept when the optimal shift `t*` is at least `-accept_tol`.
    pub accept_tol: f64,
    /// Tolerance handed to [`verify_certificate`] for nonstrict constraints.
    pub verify_tol: f64,
    /// Bound on `Σ_p tr Q_p`; keeps the search compact.
    pub trace_cap: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            barrier: BarrierOptions {
                target: Some(0.0),
                floor: Some(-1e-7),
                ..BarrierOptions::default()
            },
            accept_tol: 1e-9,
            verify_tol: 1e-8,
            trace_cap: 1e6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub feasible: bool,
    /// Largest shift `t` with every constraint `≼ -(margin + t)·I`, or an
    /// upper bound on it when the search stopped below the floor.
    pub t_star: f64,
    pub certificate: Option<LyapunovCertificate>,
    pub verification: Option<Verification>,
    pub newton_steps: usize,
}

/// Search for `Q_p ≽ I` satisfying every constraint of `lmis`.
///
/// Maximizes a common shift `t` subject to `S_i(Q) + (margin_i + t)·I ≼ 0`;
/// the system is declared feasible when `t* ≥ -accept_tol` and the rounded
/// certificate passes [`verify_certificate`].
pub fn feasibility_search(lmis: &LmiSystem, opts: &SearchOptions) -> Result<SearchOutcome> {
    let n = lmis.dim;
    let per = n * (n + 1) / 2;
    let basis = sym_basis(n);
    let index: BTreeMap<&ModeId, usize> = lmis.modes.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let t_var = per * lmis.modes.len();
    let num_vars = t_var + 1;
    let eye = RealMatrix::identity(n, n);

    let mut blocks = Vec::with_capacity(lmis.constraints.len() + lmis.modes.len() + 1);
    for c in &lmis.constraints {
        let mut coeffs: BTreeMap<usize, RealMatrix> = BTreeMap::new();
        for term in &c.terms {
            let base = per * index
                .get(term.mode())
                .ok_or_else(|| Error::UnknownMode(term.mode().clone()))?;
            for (k, e) in basis.iter().enumerate() {
                let v = -term.eval(e);
                coeffs
                    .entry(base + k)
                    .and_modify(|acc| *acc += &v)
                    .or_insert(v);
            }
        }
        let mut terms: Vec<(usize, RealMatrix)> = coeffs.into_iter().collect();
        terms.push((t_var, -&eye));
        blocks.push(LmiBlock {
            constant: -&eye * c.margin,
            terms,
        });
    }
    for i in 0..lmis.modes.len() {
        blocks.push(LmiBlock {
            constant: -&eye,
            terms: basis.iter().enumerate().map(|(k, e)| (per * i + k, e.clone())).collect(),
        });
    }
    let trace_terms: Vec<(usize, RealMatrix)> = (0..lmis.modes.len())
        .flat_map(|i| {
            basis
                .iter()
                .enumerate()
                .filter(|(_, e)| e.trace() != 0.0)
                .map(move |(k, e)| (per * i + k, RealMatrix::from_element(1, 1, -e.trace())))
        })
        .collect();
    blocks.push(LmiBlock {
        constant: RealMatrix::from_element(1, 1, opts.trace_cap),
        terms: trace_terms,
    });

    let mut objective = RealVector::zeros(num_vars);
    objective[t_var] = 1.0;
    let program = Program {
        num_vars,
        objective,
        blocks,
    };

    // Q_p = 2I, then push t low enough to be strictly interior.
    let mut y0 = RealVector::zeros(num_vars);
    for i in 0..lmis.modes.len() {
        let mut idx = 0;
        for a in 0..n {
            for b in a..n {
                if a == b {
                    y0[per * i + idx] = 2.0;
                }
                idx += 1;
            }
        }
    }
    let worst = program.blocks[..lmis.constraints.len()]
        .iter()
        .map(|b| min_eigenvalue_sym(&b.eval(&y0)))
        .fold(f64::INFINITY, f64::min);
    y0[t_var] = if worst.is_finite() { worst - 1.0 } else { -1.0 };
    if 2.0 * (n * lmis.modes.len()) as f64 >= opts.trace_cap {
        return Err(Error::InvalidArgument("trace cap too small for the start point".into()));
    }

    let res = maximize(&program, y0, opts.barrier)?;
    let t_star = res.y[t_var];
    let mut cert = LyapunovCertificate::default();
    for (i, m) in lmis.modes.iter().enumerate() {
        let vars: Vec<f64> = res.y.as_slice()[per * i..per * (i + 1)].to_vec();
        cert.q.insert(m.clone(), sym_from_vars(n, &vars));
    }
    if t_star < -opts.accept_tol {
        return Ok(SearchOutcome {
            feasible: false,
            t_star: if res.stop == crate::sdp::Stop::BelowFloor { res.upper_bound } else { t_star },
            certificate: None,
            verification: None,
            newton_steps: res.newton_steps,
        });
    }
    let verification = verify_certificate(&cert, lmis, opts.verify_tol)?;
    Ok(SearchOutcome {
        feasible: verification.ok,
        t_star,
        certificate: verification.ok.then_some(cert),
        verification: Some(verification),
        newton_steps: res.newton_steps,
    })
}

/// Result of [`min_dwell_bisection`].
#[derive(Debug, Clone)]
pub struct DwellSearch {
    /// Smallest dwell time found feasible.
    pub tau: f64,
    /// Largest dwell time found infeasible (the bracket's lower end).
    pub tau_infeasible: f64,
    pub certificate: LyapunovCertificate,
    pub constraint_count: usize,
    /// Every probe as `(τ, feasible)`, in evaluation order.
    pub profile: Vec<(f64, bool)>,
}

fn probe(spec: &SwitchedSystemSpec, template: Template, tau: f64, opts: &SearchOptions) -> Result<(SearchOutcome, usize)> {
    let lmis = build_lmi_system(spec, template, &TemplateParams::Dwell(DwellParams::Uniform(tau)))?;
    let out = feasibility_search(&lmis, opts)?;
    Ok((out, lmis.constraints.len()))
}

/// Smallest uniform dwell time for which `template` is feasible, located to
/// within `tol` on `[lo, hi]`.
///
/// Each round evaluates `probes` equally spaced interior points (in parallel
/// under [`Execution::Parallel`]) and keeps the sub-bracket between the
/// largest infeasible and the smallest feasible probe. Requires every mode
/// to be stable and the template to be feasible at `hi`.
#[allow(clippy::too_many_arguments)]
pub fn min_dwell_bisection(
    spec: &SwitchedSystemSpec,
    template: Template,
    lo: f64,
    hi: f64,
    tol: f64,
    probes: usize,
    exec: Execution,
    opts: &SearchOptions,
) -> Result<DwellSearch> {
    if !template.uses_dwell() {
        return Err(Error::InvalidArgument(format!("template {template} has no dwell time")));
    }
    if !spec.all_stable() {
        return Err(Error::NotAllStable);
    }
    if !(lo >= 0.0 && hi > lo && tol > 0.0) {
        return Err(Error::InvalidArgument(format!("bad bracket [{lo}, {hi}] with tolerance {tol}")));
    }
    let probes = probes.max(1);
    let mut profile = Vec::new();

    let (top, count) = probe(spec, template, hi, opts)?;
    profile.push((hi, top.feasible));
    let Some(mut best) = top.certificate else {
        return Err(Error::InfeasibleAtUpperBound(hi));
    };
    let (bottom, _) = probe(spec, template, lo, opts)?;
    profile.push((lo, bottom.feasible));
    if let Some(c) = bottom.certificate {
        return Ok(DwellSearch {
            tau: lo,
            tau_infeasible: lo,
            certificate: c,
            constraint_count: count,
            profile,
        });
    }

    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let points: Vec<f64> = (1..=probes)
            .map(|k| a + (b - a) * k as f64 / (probes + 1) as f64)
            .collect();
        let results = exec.map(&points, |&t| probe(spec, template, t, opts));
        let mut outcomes = Vec::with_capacity(points.len());
        for (t, r) in points.iter().zip(results) {
            let (o, _) = r?;
            profile.push((*t, o.feasible));
            outcomes.push((*t, o));
        }
        let first_ok = outcomes.iter().position(|(_, o)| o.feasible);
        match first_ok {
            Some(i) => {
                b = outcomes[i].0;
                best = outcomes[i].1.certificate.clone().expect("feasible outcome has a certificate");
                if i > 0 {
                    a = outcomes[i - 1].0;
                }
            }
            None => a = *points.last().expect("at least one probe"),
        }
    }
    Ok(DwellSearch {
        tau: b,
        tau_infeasible: a,
        certificate: best,
        constraint_count: count,
        profile,
    })
}

/// Arbitrary-switching certificate (common decrease at every jump), if one
/// exists. Requires every mode to be stable.
pub fn hespanha_morse_check(spec: &SwitchedSystemSpec, opts: &SearchOptions) -> Result<Option<LyapunovCertificate>> {
    if !spec.all_stable() {
        return Err(Error::NotAllStable);
    }
    let lmis = build_lmi_system(spec, Template::HespanhaMorse, &TemplateParams::None)?;
    Ok(feasibility_search(&lmis, opts)?.certificate)
}
