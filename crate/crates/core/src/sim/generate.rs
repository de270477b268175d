use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::bounds::TimeConstraints;
use crate::error::{Error, Result};
use crate::hull::sample_hull;
use crate::model::{ImpulseKind, ImpulseSchedule, Jumps, ModeGraph, ModeId, StabilityClass, SwitchedSystemSpec, SwitchingSignal};

/// Source of switching signals.
#[derive(Debug, Clone, PartialEq)]
pub enum SignalGenerator {
    /// Event `k` enters `modes[k mod m]` after the gap `durations[(k-1) mod d]`.
    PeriodicCycle {
        modes: Vec<ModeId>,
        durations: Vec<f64>,
        horizon: f64,
    },
    /// Random walk on `graph`. Stable sources stay `τ_p(1 + E)` with
    /// `E ~ Exp(1)`, capped at `10 τ_p`; unstable sources stay `U(0, η_p]`.
    /// With `extremal` every gap sits on its class boundary instead.
    RandomAdmissible {
        constraints: TimeConstraints,
        graph: ModeGraph,
        classes: BTreeMap<ModeId, StabilityClass>,
        initial: Option<ModeId>,
        seed: u64,
        horizon: f64,
        extremal: bool,
    },
}

impl SignalGenerator {
    pub fn random(spec: &SwitchedSystemSpec, constraints: TimeConstraints, seed: u64, horizon: f64) -> Self {
        SignalGenerator::RandomAdmissible {
            constraints,
            graph: spec.graph.clone(),
            classes: spec.subsystems.iter().map(|s| (s.id.clone(), s.class)).collect(),
            initial: None,
            seed,
            horizon,
            extremal: false,
        }
    }
}

/// Fallback dwell for stable modes without a constraint (τ = 0).
const FREE_DWELL: f64 = 1.0;

pub fn generate_signal(generator: &SignalGenerator) -> Result<SwitchingSignal> {
    match generator {
        SignalGenerator::PeriodicCycle {
            modes,
            durations,
            horizon,
        } => periodic(modes, durations, *horizon),
        SignalGenerator::RandomAdmissible {
            constraints,
            graph,
            classes,
            initial,
            seed,
            horizon,
            extremal,
        } => random(constraints, graph, classes, initial.as_ref(), *seed, *horizon, *extremal),
    }
}

fn periodic(modes: &[ModeId], durations: &[f64], horizon: f64) -> Result<SwitchingSignal> {
    if modes.is_empty() || durations.is_empty() {
        return Err(Error::InvalidArgument("periodic signal needs modes and durations".into()));
    }
    if durations.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::InvalidArgument("durations must be positive".into()));
    }
    let mut events = vec![(0.0, modes[0].clone())];
    let mut t = 0.0;
    let mut k = 1;
    loop {
        t += durations[(k - 1) % durations.len()];
        if t > horizon {
            break;
        }
        events.push((t, modes[k % modes.len()].clone()));
        k += 1;
    }
    SwitchingSignal::new(events, horizon)
}

#[allow(clippy::too_many_arguments)]
fn random(
    constraints: &TimeConstraints,
    graph: &ModeGraph,
    classes: &BTreeMap<ModeId, StabilityClass>,
    initial: Option<&ModeId>,
    seed: u64,
    horizon: f64,
    extremal: bool,
) -> Result<SwitchingSignal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = match initial {
        Some(m) => m.clone(),
        None => graph
            .vertices()
            .iter()
            .min()
            .cloned()
            .ok_or_else(|| Error::UnsatisfiableClass("graph has no vertices".into()))?,
    };
    let mut events = vec![(0.0, start.clone())];
    let mut mode = start;
    let mut t = 0.0;
    loop {
        let class = *classes.get(&mode).ok_or_else(|| Error::UnknownMode(mode.clone()))?;
        let successors: Vec<ModeId> = graph.successors(&mode).cloned().collect();
        let gap = match class {
            StabilityClass::Unstable => {
                let eta = constraints
                    .flee_for(&mode)
                    .filter(|e| *e > 0.0)
                    .ok_or_else(|| Error::UnsatisfiableClass(format!("no positive flee time for mode {mode}")))?;
                if successors.is_empty() {
                    return Err(Error::UnsatisfiableClass(format!("unstable mode {mode} has no successor")));
                }
                if extremal {
                    eta
                } else {
                    eta * (1.0 - rng.random::<f64>())
                }
            }
            _ => {
                if successors.is_empty() {
                    break;
                }
                let tau = constraints.dwell_for(&mode).unwrap_or(0.0);
                let tau = if tau > 0.0 { tau } else { FREE_DWELL };
                if extremal {
                    tau
                } else {
                    let e: f64 = Exp1.sample(&mut rng);
                    (tau * (1.0 + e)).min(10.0 * tau)
                }
            }
        };
        if t + gap > horizon {
            break;
        }
        t += gap;
        mode = successors[rng.random_range(0..successors.len())].clone();
        events.push((t, mode.clone()));
    }
    SwitchingSignal::new(events, horizon)
}

/// One impulse per switch: a listed member chosen uniformly for finite
/// sets, a Dirichlet-weighted vertex combination for hulls.
pub fn random_schedule(spec: &SwitchedSystemSpec, signal: &SwitchingSignal, seed: u64) -> Result<Option<ImpulseSchedule>> {
    let Jumps::Impulses(set) = &spec.jumps else {
        return Ok(None);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = signal
        .switch_times()
        .map(|t| {
            let m = match set.kind {
                ImpulseKind::Finite => set.matrices[rng.random_range(0..set.matrices.len())].clone(),
                ImpulseKind::ConvexHull => sample_hull(&set.matrices, &mut rng),
            };
            (t, m)
        })
        .collect();
    Ok(Some(ImpulseSchedule { entries }))
}
