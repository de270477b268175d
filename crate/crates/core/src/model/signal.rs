use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ModeGraph, ModeId, StabilityClass, SwitchedSystemSpec};
use crate::error::{Error, Result};
use crate::numlin::RealMatrix;

/// Finite realization of a switching signal: `(t_k, σ(t_k))` pairs with
/// `t_0 = 0`, followed by the horizon `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchingSignal {
    events: Vec<(f64, ModeId)>,
    horizon: f64,
}

impl SwitchingSignal {
    pub fn new(events: Vec<(f64, ModeId)>, horizon: f64) -> Result<Self> {
        let bad = |m: String| Err(Error::InadmissibleSignal(m));
        if events.is_empty() {
            return bad("signal has no initial mode".into());
        }
        if events[0].0 != 0.0 {
            return bad(format!("first event at {} instead of 0", events[0].0));
        }
        if !horizon.is_finite() || horizon < 0.0 {
            return bad(format!("horizon {horizon} is not a finite nonnegative time"));
        }
        for w in events.windows(2) {
            let ((t0, p), (t1, q)) = (&w[0], &w[1]);
            if !t1.is_finite() || t1 <= t0 {
                return bad(format!("switch times {t0} and {t1} are not strictly increasing"));
            }
            if p == q {
                return bad(format!("consecutive events at {t0} and {t1} share mode {p}"));
            }
        }
        let last = events.last().unwrap().0;
        if last > horizon {
            return bad(format!("event at {last} lies beyond the horizon {horizon}"));
        }
        Ok(SwitchingSignal { events, horizon })
    }

    /// No switches at all.
    pub fn constant(mode: ModeId, horizon: f64) -> Result<Self> {
        Self::new(vec![(0.0, mode)], horizon)
    }

    pub fn events(&self) -> &[(f64, ModeId)] {
        &self.events
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Switching instants `t_1, t_2, ...` (excluding `t_0`).
    pub fn switch_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().skip(1).map(|(t, _)| *t)
    }

    pub fn switch_count(&self) -> usize {
        self.events.len() - 1
    }

    /// Active mode at `t` (right-continuous).
    pub fn mode_at(&self, t: f64) -> &ModeId {
        let k = self.events.partition_point(|(tk, _)| *tk <= t);
        &self.events[k.saturating_sub(1)].1
    }

    /// `(start, end, mode)` for every interval, the last one ending at the
    /// horizon.
    pub fn intervals(&self) -> Vec<(f64, f64, &ModeId)> {
        self.events
            .iter()
            .enumerate()
            .map(|(k, (t, m))| {
                let end = self.events.get(k + 1).map_or(self.horizon, |e| e.0);
                (*t, end, m)
            })
            .collect()
    }

    /// Every switch follows a graph edge.
    pub fn check_graph(&self, graph: &ModeGraph) -> Result<()> {
        for w in self.events.windows(2) {
            let (p, q) = (&w[0].1, &w[1].1);
            if !graph.has_edge(p, q) {
                return Err(Error::InadmissibleSignal(format!(
                    "switch {p} -> {q} at t = {} is not a graph edge",
                    w[1].0
                )));
            }
        }
        if let Some((_, m)) = self.events.iter().find(|(_, m)| !graph.vertices().contains(m)) {
            return Err(Error::InadmissibleSignal(format!("mode {m} is not in the graph")));
        }
        Ok(())
    }

    /// Prefix on `[0, t]`.
    pub fn truncate(&self, t: f64) -> Self {
        let events = self.events.iter().filter(|(tk, _)| *tk <= t).cloned().collect();
        SwitchingSignal { events, horizon: t }
    }

    /// Suffix on `[t, T]` shifted to start at zero. The mode active at `t`
    /// becomes the initial mode; an event exactly at `t` is not repeated.
    pub fn tail(&self, t: f64) -> Self {
        let mut events = vec![(0.0, self.mode_at(t).clone())];
        events.extend(self.events.iter().filter(|(tk, _)| *tk > t).map(|(tk, m)| (tk - t, m.clone())));
        SwitchingSignal {
            events,
            horizon: (self.horizon - t).max(0.0),
        }
    }
}

/// Impulse matrices chosen at each switching instant `t_1, t_2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseSchedule {
    pub entries: Vec<(f64, RealMatrix)>,
}

impl ImpulseSchedule {
    /// The same matrix at every switch of `signal`.
    pub fn constant(signal: &SwitchingSignal, m: &RealMatrix) -> Self {
        ImpulseSchedule {
            entries: signal.switch_times().map(|t| (t, m.clone())).collect(),
        }
    }

    /// Entries strictly after `t`, shifted to match [`SwitchingSignal::tail`].
    pub fn tail(&self, t: f64) -> Self {
        ImpulseSchedule {
            entries: self.entries.iter().filter(|(s, _)| *s > t).map(|(s, m)| (s - t, m.clone())).collect(),
        }
    }

    /// Entries up to and including `t`.
    pub fn truncate(&self, t: f64) -> Self {
        ImpulseSchedule {
            entries: self.entries.iter().filter(|(s, _)| *s <= t).cloned().collect(),
        }
    }

    pub fn check_against(&self, signal: &SwitchingSignal) -> Result<()> {
        let times: Vec<f64> = signal.switch_times().collect();
        if times.len() != self.entries.len() {
            return Err(Error::ScheduleMismatch(format!(
                "{} switches but {} scheduled impulses",
                times.len(),
                self.entries.len()
            )));
        }
        for (t, (s, _)) in times.iter().zip(&self.entries) {
            if (t - s).abs() > 1e-12 * t.abs().max(1.0) {
                return Err(Error::ScheduleMismatch(format!("impulse at {s} but switch at {t}")));
            }
        }
        Ok(())
    }
}

/// Switch counts on `[0, t)`, classified by the mode entered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SwitchCounts {
    pub to_stable: usize,
    pub to_unstable: usize,
    pub total: usize,
}

/// Count events `t_k < t` (including `t_0`) by the class of `σ(t_k)`.
pub fn count_switches(signal: &SwitchingSignal, spec: &SwitchedSystemSpec, t: f64) -> Result<SwitchCounts> {
    let mut c = SwitchCounts::default();
    for (tk, m) in signal.events() {
        if *tk >= t {
            break;
        }
        c.total += 1;
        match spec.class_of(m)? {
            StabilityClass::Stable => c.to_stable += 1,
            StabilityClass::Unstable => c.to_unstable += 1,
            StabilityClass::Marginal => {}
        }
    }
    Ok(c)
}

/// Per-mode counts `N^p(0, t)`.
pub fn count_switches_per_mode(signal: &SwitchingSignal, t: f64) -> BTreeMap<ModeId, usize> {
    let mut out = BTreeMap::new();
    for (tk, m) in signal.events() {
        if *tk >= t {
            break;
        }
        *out.entry(m.clone()).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(events: &[(f64, &str)], horizon: f64) -> Result<SwitchingSignal> {
        SwitchingSignal::new(events.iter().map(|(t, m)| (*t, ModeId::from(*m))).collect(), horizon)
    }

    #[test]
    fn rejects_bad_signals() {
        assert!(sig(&[(0.5, "a")], 1.0).is_err());
        assert!(sig(&[(0.0, "a"), (1.0, "a")], 2.0).is_err());
        assert!(sig(&[(0.0, "a"), (1.0, "b"), (1.0, "a")], 2.0).is_err());
        assert!(sig(&[(0.0, "a"), (3.0, "b")], 2.0).is_err());
    }

    #[test]
    fn mode_lookup_is_right_continuous() {
        let s = sig(&[(0.0, "a"), (1.0, "b"), (2.5, "a")], 4.0).unwrap();
        assert_eq!(s.mode_at(0.0).as_str(), "a");
        assert_eq!(s.mode_at(0.999).as_str(), "a");
        assert_eq!(s.mode_at(1.0).as_str(), "b");
        assert_eq!(s.mode_at(3.9).as_str(), "a");
        let iv = s.intervals();
        assert_eq!(iv.len(), 3);
        assert_eq!((iv[2].0, iv[2].1), (2.5, 4.0));
    }

    #[test]
    fn per_mode_counts() {
        let s = sig(&[(0.0, "a"), (1.0, "b"), (2.0, "a"), (3.0, "b")], 4.0).unwrap();
        let c = count_switches_per_mode(&s, 3.0);
        assert_eq!(c[&ModeId::from("a")], 2);
        assert_eq!(c[&ModeId::from("b")], 1);
        assert!(count_switches_per_mode(&s, 0.0).is_empty());
    }

    #[test]
    fn schedule_alignment() {
        let s = sig(&[(0.0, "a"), (1.0, "b")], 2.0).unwrap();
        let m = RealMatrix::identity(2, 2);
        assert!(ImpulseSchedule::constant(&s, &m).check_against(&s).is_ok());
        let wrong = ImpulseSchedule { entries: vec![] };
        assert!(matches!(wrong.check_against(&s), Err(Error::ScheduleMismatch(_))));
    }
}
