//! Switched-system descriptions: subsystems, jump maps, mode graphs,
//! switching signals, plus validation and graph utilities.

mod graph;
mod rescale;
mod signal;
mod validate;

pub use graph::{find_cycle, topological_order, ModeGraph};
pub use rescale::{rescale_bases, unstable_edge_rho, Rescaling, DEFAULT_XI};
pub use signal::{count_switches, count_switches_per_mode, ImpulseSchedule, SwitchCounts, SwitchingSignal};
pub use validate::{unstable_subgraph_acyclic, validate, Diagnostic, DiagnosticCode};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bounds::decay_constants;
use crate::error::{Error, Result};
use crate::numlin::{eigendecompose, ComplexMatrix, EigenStructure, NormSpec, RealMatrix};

/// Mode label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeId(String);

impl ModeId {
    pub fn new(s: impl Into<String>) -> Self {
        ModeId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ModeId {
    fn from(s: &str) -> Self {
        ModeId(s.to_string())
    }
}

/// Ordered mode pair `(from, to)`.
pub type Edge = (ModeId, ModeId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityClass {
    Stable,
    Unstable,
    Marginal,
}

/// One mode: its matrix, Jordan data and exponential bound constants.
///
/// For stable modes `‖e^{J t}‖ ≤ c e^{-rate t}`, for unstable ones
/// `‖e^{J t}‖ ≤ c e^{rate t}`. Marginal modes carry `rate = 0` and are
/// rejected by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemSpec {
    pub id: ModeId,
    pub a: RealMatrix,
    pub eig: EigenStructure,
    pub class: StabilityClass,
    pub c: f64,
    pub rate: f64,
    /// Decay margin used for defective modes.
    pub margin: Option<f64>,
}

impl SubsystemSpec {
    /// Computed Jordan basis; a defective mode gets the default margin of a
    /// tenth of its distance to the imaginary axis.
    pub fn new(id: impl Into<ModeId>, a: RealMatrix) -> Result<Self> {
        let eig = eigendecompose(&a)?;
        let margin = default_margin(&eig);
        Self::from_parts(id.into(), a, eig, margin)
    }

    /// Computed Jordan basis with an explicit decay margin.
    pub fn with_margin(id: impl Into<ModeId>, a: RealMatrix, margin: Option<f64>) -> Result<Self> {
        let eig = eigendecompose(&a)?;
        Self::from_parts(id.into(), a, eig, margin)
    }

    /// Caller-supplied diagonalizing basis.
    pub fn with_basis(id: impl Into<ModeId>, a: RealMatrix, basis: ComplexMatrix) -> Result<Self> {
        let eig = EigenStructure::from_basis(&a, basis)?;
        Self::from_parts(id.into(), a, eig, None)
    }

    fn from_parts(id: ModeId, a: RealMatrix, eig: EigenStructure, margin: Option<f64>) -> Result<Self> {
        let class = classify(&a, &eig);
        let mut sub = SubsystemSpec {
            id,
            a,
            eig,
            class,
            c: 1.0,
            rate: 0.0,
            margin,
        };
        sub.refresh_decay(&NormSpec::Spectral)?;
        Ok(sub)
    }

    /// Recompute `(c, rate)` for the given norm.
    pub fn refresh_decay(&mut self, norm: &NormSpec) -> Result<()> {
        if self.class == StabilityClass::Marginal {
            self.c = 1.0;
            self.rate = 0.0;
            return Ok(());
        }
        let (c, rate) = decay_constants(self, norm, self.margin)
            .map_err(|e| match e {
                Error::MarginRequired(_) => Error::MarginRequired(self.id.clone()),
                other => other,
            })?;
        self.c = c;
        self.rate = rate;
        Ok(())
    }

    /// Multiply the Jordan basis by a positive scalar.
    pub fn scale_basis(&mut self, factor: f64) {
        self.eig = self.eig.scaled(factor);
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.eig.basis
    }
}

/// Tenth of the distance from the critical eigenvalue to the imaginary
/// axis, for defective modes only.
pub fn default_margin(eig: &EigenStructure) -> Option<f64> {
    if !eig.defective {
        return None;
    }
    let gap = eig.max_real_part().abs();
    (gap > 0.0).then_some(0.1 * gap)
}

fn classify(a: &RealMatrix, eig: &EigenStructure) -> StabilityClass {
    let tol = 1e-10 * a.norm().max(1.0);
    let max_re = eig.max_real_part();
    if max_re < -tol {
        StabilityClass::Stable
    } else if max_re > tol {
        StabilityClass::Unstable
    } else {
        StabilityClass::Marginal
    }
}

/// Reset matrices indexed by `(from, to)`.
pub type ResetCollection = BTreeMap<Edge, RealMatrix>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpulseKind {
    Finite,
    ConvexHull,
}

/// Impulse matrices: the members of a finite set, or the vertices of a
/// convex hull.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseSet {
    pub kind: ImpulseKind,
    pub matrices: Vec<RealMatrix>,
}

impl ImpulseSet {
    pub fn finite(matrices: Vec<RealMatrix>) -> Self {
        ImpulseSet {
            kind: ImpulseKind::Finite,
            matrices,
        }
    }

    pub fn hull(vertices: Vec<RealMatrix>) -> Self {
        ImpulseSet {
            kind: ImpulseKind::ConvexHull,
            matrices: vertices,
        }
    }

    /// Whether `m` belongs to the set, to absolute tolerance `tol` on the
    /// Frobenius distance.
    pub fn contains(&self, m: &RealMatrix, tol: f64) -> bool {
        match self.kind {
            ImpulseKind::Finite => self
                .matrices
                .iter()
                .any(|x| x.shape() == m.shape() && (x - m).norm() <= tol),
            ImpulseKind::ConvexHull => crate::hull::in_hull(&self.matrices, m, tol),
        }
    }
}

/// Jump maps applied at switching instants.
#[derive(Debug, Clone, PartialEq)]
pub enum Jumps {
    Resets(ResetCollection),
    Impulses(ImpulseSet),
}

impl Jumps {
    /// Matrices that can be applied when switching along `edge`.
    pub fn candidates<'a>(&'a self, edge: &Edge) -> Vec<&'a RealMatrix> {
        match self {
            Jumps::Resets(r) => r.get(edge).into_iter().collect(),
            Jumps::Impulses(set) => set.matrices.iter().collect(),
        }
    }
}

/// A complete switched system.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedSystemSpec {
    pub subsystems: Vec<SubsystemSpec>,
    pub graph: ModeGraph,
    pub jumps: Jumps,
    pub norm: NormSpec,
}

impl SwitchedSystemSpec {
    /// Assemble a system; decay constants are recomputed for `norm`.
    pub fn new(mut subsystems: Vec<SubsystemSpec>, graph: ModeGraph, jumps: Jumps, norm: NormSpec) -> Result<Self> {
        for s in &mut subsystems {
            s.refresh_decay(&norm)?;
        }
        Ok(SwitchedSystemSpec {
            subsystems,
            graph,
            jumps,
            norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.subsystems.first().map_or(0, |s| s.dim())
    }

    pub fn subsystem(&self, id: &ModeId) -> Result<&SubsystemSpec> {
        self.subsystems
            .iter()
            .find(|s| &s.id == id)
            .ok_or_else(|| Error::UnknownMode(id.clone()))
    }

    pub fn subsystem_mut(&mut self, id: &ModeId) -> Result<&mut SubsystemSpec> {
        self.subsystems
            .iter_mut()
            .find(|s| &s.id == id)
            .ok_or_else(|| Error::UnknownMode(id.clone()))
    }

    pub fn class_of(&self, id: &ModeId) -> Result<StabilityClass> {
        Ok(self.subsystem(id)?.class)
    }

    /// Edges whose source has the given class.
    pub fn edges_from_class(&self, class: StabilityClass) -> Vec<Edge> {
        self.graph
            .edges()
            .filter(|(p, _)| self.class_of(p).ok() == Some(class))
            .cloned()
            .collect()
    }

    pub fn stable_edges(&self) -> Vec<Edge> {
        self.edges_from_class(StabilityClass::Stable)
    }

    pub fn unstable_edges(&self) -> Vec<Edge> {
        self.edges_from_class(StabilityClass::Unstable)
    }

    pub fn all_stable(&self) -> bool {
        self.subsystems.iter().all(|s| s.class == StabilityClass::Stable)
    }

    /// Copy with a different norm; decay constants follow.
    pub fn with_norm(&self, norm: NormSpec) -> Result<Self> {
        Self::new(self.subsystems.clone(), self.graph.clone(), self.jumps.clone(), norm)
    }

    /// Copy with different jump maps.
    pub fn with_jumps(&self, jumps: Jumps) -> Self {
        SwitchedSystemSpec {
            jumps,
            ..self.clone()
        }
    }
}
