//! Piecewise closed-form simulation of reset and impulsive switched flows.
//!
//! The state is right-continuous: the sample stored at a switching instant
//! is the post-jump state, and [`JumpEvent`] keeps the pre-jump value.

mod classify;
mod export;
mod generate;
mod probe;

pub use classify::{classify_signal, ModeGaps, SignalClassReport};
pub use export::{write_csv, JumpFlag};
pub use generate::{generate_signal, random_schedule, SignalGenerator};
pub use probe::{empirical_probe, trajectory_bound_constant, ProbeOptions, ProbeReport, DEFAULT_GROWTH_THRESHOLD};

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hull::in_hull;
use crate::lyapunov::LyapunovCertificate;
use crate::model::{ImpulseKind, ImpulseSchedule, Jumps, ModeId, SwitchedSystemSpec, SwitchingSignal};
use crate::numlin::{vector_norm, FlowMap, RealMatrix, RealVector};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: RealVector,
    pub mode: ModeId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    pub t: f64,
    pub pre: RealVector,
    pub post: RealVector,
    /// `R(p,q)` for resets, `M<i>` for a listed impulse, `hull` otherwise.
    pub matrix_id: String,
    pub matrix: RealMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub jumps: Vec<JumpEvent>,
    /// `(t, ‖x(t)‖)` for every sample, in the system's norm.
    pub norm_trace: Vec<(f64, f64)>,
    /// `(t_k, x(t_k), σ(t_k))` for `k = 0, 1, ...`; states are post-jump.
    pub event_states: Vec<Sample>,
}

impl Trajectory {
    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    /// `sup_t ‖x(t)‖ / ‖x(0)‖` over the samples and pre-jump states, or
    /// `None` for a zero initial state.
    pub fn max_norm_ratio(&self, spec: &SwitchedSystemSpec) -> Option<f64> {
        let x0 = self.norm_trace.first()?.1;
        if x0 == 0.0 {
            return None;
        }
        let samples = self.norm_trace.iter().map(|(_, n)| *n);
        let pre = self.jumps.iter().map(|j| vector_norm(&j.pre, &spec.norm));
        Some(samples.chain(pre).fold(0.0, f64::max) / x0)
    }
}

/// Default sampling step: a twentieth of the shortest interval.
pub fn default_step(signal: &SwitchingSignal) -> f64 {
    let shortest = signal
        .intervals()
        .iter()
        .map(|(s, e, _)| e - s)
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if shortest.is_finite() {
        shortest / 20.0
    } else {
        1.0
    }
}

fn jump_for(
    spec: &SwitchedSystemSpec,
    from: &ModeId,
    to: &ModeId,
    k: usize,
    schedule: Option<&ImpulseSchedule>,
) -> Result<(String, RealMatrix)> {
    match &spec.jumps {
        Jumps::Resets(r) => r
            .get(&(from.clone(), to.clone()))
            .map(|m| (format!("R({from},{to})"), m.clone()))
            .ok_or_else(|| Error::MissingReset(from.clone(), to.clone())),
        Jumps::Impulses(set) => {
            let m = &schedule.expect("schedule checked before simulation").entries[k].1;
            let id = set
                .matrices
                .iter()
                .position(|v| v == m)
                .map_or_else(|| "hull".to_string(), |i| format!("M{}", i + 1));
            Ok((id, m.clone()))
        }
    }
}

fn check_schedule(spec: &SwitchedSystemSpec, signal: &SwitchingSignal, schedule: Option<&ImpulseSchedule>) -> Result<()> {
    match (&spec.jumps, schedule) {
        (Jumps::Resets(_), None) => Ok(()),
        (Jumps::Resets(_), Some(_)) => Err(Error::ScheduleMismatch("system uses resets; no schedule expected".into())),
        (Jumps::Impulses(_), None) if signal.switch_count() == 0 => Ok(()),
        (Jumps::Impulses(_), None) => Err(Error::ScheduleMismatch("impulsive system needs a schedule".into())),
        (Jumps::Impulses(set), Some(s)) => {
            s.check_against(signal)?;
            for (t, m) in &s.entries {
                let member = match set.kind {
                    ImpulseKind::Finite => set.contains(m, 1e-12),
                    ImpulseKind::ConvexHull => in_hull(&set.matrices, m, 1e-9),
                };
                if !member {
                    return Err(Error::ScheduleMismatch(format!("impulse at t = {t} is not in the impulse set")));
                }
            }
            Ok(())
        }
    }
}

/// Simulate `spec` under `signal` from `x0`, sampling every `step` inside
/// each interval. Flows are evaluated as `e^{A(t - t_k)} x(t_k)` from the
/// start of the current interval, so sampling never accumulates error.
pub fn simulate(
    spec: &SwitchedSystemSpec,
    signal: &SwitchingSignal,
    schedule: Option<&ImpulseSchedule>,
    x0: &RealVector,
    step: f64,
) -> Result<Trajectory> {
    let n = spec.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!("initial state has {} entries, system has {n}", x0.len())));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("sample step {step} must be positive")));
    }
    signal.check_graph(&spec.graph)?;
    check_schedule(spec, signal, schedule)?;

    let mut flows: BTreeMap<&ModeId, FlowMap> = BTreeMap::new();
    for s in &spec.subsystems {
        flows.insert(&s.id, FlowMap::from_eigen(&s.a, s.eig.clone())?);
    }

    let mut traj = Trajectory {
        samples: Vec::new(),
        jumps: Vec::new(),
        norm_trace: Vec::new(),
        event_states: Vec::new(),
    };
    let intervals = signal.intervals();
    let last = intervals.len() - 1;
    let mut x = x0.clone();
    for (k, (start, end, mode)) in intervals.iter().enumerate() {
        let flow = &flows[*mode];
        traj.event_states.push(Sample {
            t: *start,
            x: x.clone(),
            mode: (*mode).clone(),
        });
        let guard = 1e-12 * end.abs().max(1.0);
        let mut j = 0usize;
        loop {
            let t = start + j as f64 * step;
            if j > 0 && t >= end - guard {
                break;
            }
            let xt = if j == 0 { x.clone() } else { flow.at(t - start) * &x };
            traj.samples.push(Sample {
                t,
                x: xt,
                mode: (*mode).clone(),
            });
            j += 1;
            if t >= *end {
                break;
            }
        }
        let pre = flow.at(end - start) * &x;
        if k < last {
            let next = intervals[k + 1].2;
            let (matrix_id, matrix) = jump_for(spec, mode, next, k, schedule)?;
            let post = &matrix * &pre;
            traj.jumps.push(JumpEvent {
                t: *end,
                pre,
                post: post.clone(),
                matrix_id,
                matrix,
            });
            x = post;
        } else if end > start {
            traj.samples.push(Sample {
                t: *end,
                x: pre,
                mode: (*mode).clone(),
            });
        }
    }
    traj.norm_trace = traj.samples.iter().map(|s| (s.t, vector_norm(&s.x, &spec.norm))).collect();
    Ok(traj)
}

/// `V_{σ(t_k)}(x(t_k))` at every event of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovPoint {
    pub t: f64,
    pub value: f64,
}

pub fn lyapunov_trace(traj: &Trajectory, cert: &LyapunovCertificate) -> Result<Vec<LyapunovPoint>> {
    traj.event_states
        .iter()
        .map(|s| {
            Ok(LyapunovPoint {
                t: s.t,
                value: cert.value(&s.mode, &s.x)?,
            })
        })
        .collect()
}
