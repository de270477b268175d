use std::collections::BTreeMap;

use serde::Serialize;

use crate::bounds::TimeConstraints;
use crate::model::{ModeId, StabilityClass, SwitchedSystemSpec, SwitchingSignal};

/// Shortest and longest completed stay in one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeGaps {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Tightest class parameters met by a signal. Only intervals closed by a
/// switch count; the open last interval constrains nothing. `None` means
/// the signal is a member for every value of that parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalClassReport {
    pub switch_count: usize,
    /// Largest `τ` with every gap `≥ τ`.
    pub uniform_dwell: Option<f64>,
    /// Smallest `η` with every gap `≤ η`.
    pub uniform_flee: Option<f64>,
    /// Largest `τ` with every gap leaving a stable mode `≥ τ`.
    pub dwell: Option<f64>,
    /// Smallest `η` with every gap leaving an unstable mode `≤ η`.
    pub flee: Option<f64>,
    pub per_mode: BTreeMap<ModeId, ModeGaps>,
    /// Every switch follows a graph edge and every mode exists.
    pub graph_admissible: bool,
    #[serde(skip)]
    classes: BTreeMap<ModeId, StabilityClass>,
}

impl SignalClassReport {
    /// Membership in the class described by `constraints`, with absolute
    /// slack `tol` on every gap.
    pub fn satisfies(&self, constraints: &TimeConstraints, tol: f64) -> bool {
        self.graph_admissible
            && self.per_mode.iter().all(|(m, g)| match self.classes.get(m) {
                Some(StabilityClass::Stable) => constraints.dwell_for(m).is_none_or(|tau| g.min >= tau - tol),
                Some(StabilityClass::Unstable) => constraints.flee_for(m).is_some_and(|eta| g.max <= eta + tol),
                _ => false,
            })
    }
}

pub fn classify_signal(signal: &SwitchingSignal, spec: &SwitchedSystemSpec) -> SignalClassReport {
    let classes: BTreeMap<ModeId, StabilityClass> = spec.subsystems.iter().map(|s| (s.id.clone(), s.class)).collect();
    let mut per_mode: BTreeMap<ModeId, ModeGaps> = BTreeMap::new();
    for (start, end, mode) in signal.intervals().into_iter().take(signal.switch_count()) {
        let gap = end - start;
        per_mode
            .entry(mode.clone())
            .and_modify(|g| {
                g.min = g.min.min(gap);
                g.max = g.max.max(gap);
                g.count += 1;
            })
            .or_insert(ModeGaps {
                min: gap,
                max: gap,
                count: 1,
            });
    }
    let pick = |class: Option<StabilityClass>, longest: bool| {
        per_mode
            .iter()
            .filter(|(m, _)| class.is_none() || classes.get(*m) == class.as_ref())
            .map(|(_, g)| if longest { g.max } else { g.min })
            .reduce(if longest { f64::max } else { f64::min })
    };
    let uniform_dwell = pick(None, false);
    let uniform_flee = pick(None, true);
    let dwell = pick(Some(StabilityClass::Stable), false);
    let flee = pick(Some(StabilityClass::Unstable), true);
    SignalClassReport {
        switch_count: signal.switch_count(),
        uniform_dwell,
        uniform_flee,
        dwell,
        flee,
        graph_admissible: signal.check_graph(&spec.graph).is_ok()
            && signal.events().iter().all(|(_, m)| classes.contains_key(m)),
        per_mode,
        classes,
    }
}
