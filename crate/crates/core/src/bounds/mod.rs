//! Flow-based dwell and flee times, admissible jump sets, stabilizing
//! resets and constrained jump selection.

mod decay;
mod flow;
mod hullmin;
mod jumps;

pub use decay::{decay_constants, poly_exp_sup};
pub use flow::{
    edge_terms, flow_bounds_with, flow_dwell_flee, flow_dwell_flee_impulsive,
    flow_dwell_flee_impulsive_mode_dependent, flow_dwell_flee_mode_dependent, EdgeTerm, TimeConstraints,
};
pub use hullmin::{min_max_ratio, HullNormTerm};
pub use jumps::{
    admissible_jump_ball, constrained_jump_selection, stabilizing_resets, transfer_norm, AdmissibleJumpBall,
    JumpSelection, SelectionMode,
};
