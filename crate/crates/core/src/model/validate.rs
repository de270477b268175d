use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{find_cycle, Jumps, ModeId, StabilityClass, SwitchedSystemSpec};
use crate::hull::zero_in_hull;
use crate::model::ImpulseKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiagnosticCode {
    DuplicateMode,
    DimensionMismatch,
    VertexMismatch,
    UnknownMode,
    SelfLoop,
    DanglingMode,
    MarginalMode,
    MissingReset,
    ZeroJumpMatrix,
    EmptyImpulseSet,
    ZeroInHull,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.code, self.message)
    }
}

/// Check every structural invariant of `spec`. An empty list means valid.
pub fn validate(spec: &SwitchedSystemSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut push = |code, message: String| out.push(Diagnostic { code, message });

    let n = spec.dim();
    let mut ids = BTreeSet::new();
    for s in &spec.subsystems {
        if !ids.insert(s.id.clone()) {
            push(DiagnosticCode::DuplicateMode, format!("mode {} declared twice", s.id));
        }
        if s.a.nrows() != n || s.a.ncols() != n {
            push(
                DiagnosticCode::DimensionMismatch,
                format!("mode {} is {}x{}, expected {n}x{n}", s.id, s.a.nrows(), s.a.ncols()),
            );
        }
        if s.class == StabilityClass::Marginal {
            push(
                DiagnosticCode::MarginalMode,
                format!("mode {} has its rightmost eigenvalues on the imaginary axis", s.id),
            );
        }
    }

    let vertices: BTreeSet<ModeId> = spec.graph.vertices().iter().cloned().collect();
    if vertices != ids {
        push(
            DiagnosticCode::VertexMismatch,
            "graph vertices differ from the declared modes".into(),
        );
    }
    for (p, q) in spec.graph.edges() {
        for m in [p, q] {
            if !ids.contains(m) {
                push(DiagnosticCode::UnknownMode, format!("edge ({p}, {q}) references unknown mode {m}"));
            }
        }
        if p == q {
            push(DiagnosticCode::SelfLoop, format!("self-loop at mode {p}"));
        }
    }
    for v in spec.graph.vertices() {
        if spec.graph.out_degree(v) == 0 {
            push(DiagnosticCode::DanglingMode, format!("mode {v} has no outgoing edge"));
        }
    }

    let check_shape = |m: &crate::numlin::RealMatrix| m.nrows() == n && m.ncols() == n;
    match &spec.jumps {
        Jumps::Resets(resets) => {
            for (p, q) in spec.graph.edges() {
                if !resets.contains_key(&(p.clone(), q.clone())) {
                    push(DiagnosticCode::MissingReset, format!("no reset for edge ({p}, {q})"));
                }
            }
            for ((p, q), r) in resets {
                if p == q {
                    push(DiagnosticCode::SelfLoop, format!("reset declared for ({p}, {q})"));
                }
                for m in [p, q] {
                    if !ids.contains(m) {
                        push(DiagnosticCode::UnknownMode, format!("reset ({p}, {q}) references unknown mode {m}"));
                    }
                }
                if !check_shape(r) {
                    push(DiagnosticCode::DimensionMismatch, format!("reset ({p}, {q}) has the wrong shape"));
                } else if r.iter().all(|x| *x == 0.0) {
                    push(DiagnosticCode::ZeroJumpMatrix, format!("reset ({p}, {q}) is the zero matrix"));
                }
            }
        }
        Jumps::Impulses(set) => {
            if set.matrices.is_empty() {
                push(DiagnosticCode::EmptyImpulseSet, "impulse set is empty".into());
            }
            let mut shapes_ok = true;
            for (i, m) in set.matrices.iter().enumerate() {
                if !check_shape(m) {
                    shapes_ok = false;
                    push(DiagnosticCode::DimensionMismatch, format!("impulse {} has the wrong shape", i + 1));
                } else if m.iter().all(|x| *x == 0.0) {
                    push(DiagnosticCode::ZeroJumpMatrix, format!("impulse {} is the zero matrix", i + 1));
                }
            }
            if set.kind == ImpulseKind::ConvexHull
                && shapes_ok
                && !set.matrices.is_empty()
                && set.matrices.iter().all(|m| m.iter().any(|x| *x != 0.0))
                && zero_in_hull(&set.matrices)
            {
                push(DiagnosticCode::ZeroInHull, "the zero matrix lies in the impulse hull".into());
            }
        }
    }
    out
}

/// Whether the subgraph of edges leaving unstable modes is acyclic, with
/// a cycle witness when it is not.
pub fn unstable_subgraph_acyclic(spec: &SwitchedSystemSpec) -> (bool, Option<Vec<ModeId>>) {
    let gu = spec
        .graph
        .filter_edges(|(p, _)| spec.class_of(p).ok() == Some(StabilityClass::Unstable));
    match find_cycle(&gu) {
        Some(c) => (false, Some(c)),
        None => (true, None),
    }
}
