use thiserror::Error;

use crate::model::ModeId;

/// Errors raised by the analysis routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("eigensolver failed to converge")]
    NonConvergence,
    #[error("eigenvector basis is ill-conditioned (condition number {0:.3e})")]
    IllConditionedBasis(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("graph contains a directed cycle: {}", format_cycle(.0))]
    CyclicGraph(Vec<ModeId>),
    #[error("unstable subgraph is cyclic: {}", format_cycle(.0))]
    HypothesisViolated(Vec<ModeId>),
    #[error("mode {0} is defective; a decay margin is required")]
    MarginRequired(ModeId),
    #[error("mode {0} is marginal (eigenvalues on the imaginary axis only)")]
    MarginalMode(ModeId),
    #[error("flee time undefined: edge ({0}, {1}) has a nonnegative log-norm term")]
    FleeUndefined(ModeId, ModeId),
    #[error("all modes must be stable")]
    NotAllStable,
    #[error("the zero matrix belongs to the candidate set")]
    ZeroInSet,
    #[error("no certificate found at the upper end of the search range ({0})")]
    InfeasibleAtUpperBound(f64),
    #[error("invalid switch-frequency ratios: {0}")]
    RatioInvalid(String),
    #[error("signal is not admissible: {0}")]
    InadmissibleSignal(String),
    #[error("impulse schedule does not match the signal: {0}")]
    ScheduleMismatch(String),
    #[error("signal class cannot be satisfied: {0}")]
    UnsatisfiableClass(String),
    #[error("missing reset for edge ({0}, {1})")]
    MissingReset(ModeId, ModeId),
    #[error("unknown mode {0}")]
    UnknownMode(ModeId),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn format_cycle(cycle: &[ModeId]) -> String {
    cycle
        .iter()
        .map(|m| m.as_str())
        .collect::<Vec<_>>()
        .join(" -> ")
}

pub type Result<T> = std::result::Result<T, Error>;
