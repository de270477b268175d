use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::generate::{generate_signal, random_schedule, SignalGenerator};
use super::{default_step, simulate};
use crate::bounds::TimeConstraints;
use crate::error::Result;
use crate::model::{StabilityClass, SwitchedSystemSpec};
use crate::numlin::{operator_norm, RealVector};
use crate::par::Execution;

/// Ratio above which a trial is flagged as growing.
pub const DEFAULT_GROWTH_THRESHOLD: f64 = 1e3;

#[derive(Debug, Clone, Copy)]
pub struct ProbeOptions {
    pub trials: usize,
    pub horizon: f64,
    pub seed: u64,
    /// Sampling step; `None` picks a twentieth of the shortest interval.
    pub step: Option<f64>,
    pub growth_threshold: f64,
    pub exec: Execution,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            trials: 100,
            horizon: 100.0,
            seed: 0,
            step: None,
            growth_threshold: DEFAULT_GROWTH_THRESHOLD,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub trials: usize,
    /// `sup_t ‖x(t)‖ / ‖x(0)‖` per trial.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub growth: Vec<bool>,
    pub any_growth: bool,
    /// Bound from [`trajectory_bound_constant`] for comparison.
    pub bound_constant: f64,
}

/// `C = max_p ‖P_p‖ · max_p ‖P_p⁻¹‖ · max_p c_p · max(1, e^{μ η})` in the
/// system norm, where `μ η` is the largest unstable growth exponent the
/// constraints allow. Every admissible trajectory obeys `‖x(t)‖ ≤ C ‖x(0)‖`
/// when the constraints come from the flow bounds.
pub fn trajectory_bound_constant(spec: &SwitchedSystemSpec, constraints: &TimeConstraints) -> Result<f64> {
    let mut p_max = 0.0f64;
    let mut p_inv_max = 0.0f64;
    let mut c_max = 0.0f64;
    let mut growth = 0.0f64;
    for s in &spec.subsystems {
        p_max = p_max.max(operator_norm(s.basis(), &spec.norm));
        p_inv_max = p_inv_max.max(operator_norm(&s.eig.basis_inverse()?, &spec.norm));
        c_max = c_max.max(s.c);
        if s.class == StabilityClass::Unstable {
            if let Some(eta) = constraints.flee_for(&s.id) {
                growth = growth.max(s.rate * eta);
            }
        }
    }
    Ok(p_max * p_inv_max * c_max * growth.exp())
}

/// Run randomized admissible signals and report the worst amplification.
///
/// Trial 0 always uses the boundary signal (every gap exactly on its class
/// limit); the rest draw gaps as in [`SignalGenerator::RandomAdmissible`].
/// Impulsive systems get random schedules (Dirichlet hull combinations).
/// This is empirical evidence only.
pub fn empirical_probe(spec: &SwitchedSystemSpec, constraints: &TimeConstraints, opts: &ProbeOptions) -> Result<ProbeReport> {
    let n = spec.dim();
    let run = |i: usize| -> Result<f64> {
        let seed = opts.seed.wrapping_add(i as u64);
        let mut generator = SignalGenerator::random(spec, constraints.clone(), seed, opts.horizon);
        if let SignalGenerator::RandomAdmissible { extremal, .. } = &mut generator {
            *extremal = i == 0;
        }
        let signal = generate_signal(&generator)?;
        let schedule = random_schedule(spec, &signal, seed ^ 0x5eed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa11ce);
        let x0 = RealVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let step = opts.step.unwrap_or_else(|| default_step(&signal));
        let traj = simulate(spec, &signal, schedule.as_ref(), &x0, step)?;
        Ok(traj.max_norm_ratio(spec).unwrap_or(0.0))
    };
    let ratios: Vec<f64> = opts.exec.map_range(opts.trials, run).into_iter().collect::<Result<_>>()?;
    let growth: Vec<bool> = ratios.iter().map(|r| !(*r <= opts.growth_threshold)).collect();
    Ok(ProbeReport {
        trials: opts.trials,
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        any_growth: growth.iter().any(|g| *g),
        growth,
        ratios,
        bound_constant: trajectory_bound_constant(spec, constraints)?,
    })
}
