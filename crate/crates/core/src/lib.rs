//! Dwell-time and flee-time stability analysis for linear switched systems
//! with state resets or impulses.
//!
//! The crate is organised bottom-up:
//!
//! * [`numlin`]: eigenstructure, matrix exponentials, norms.
//! * [`model`]: subsystems, jump maps, mode graphs, switching signals.
//! * [`bounds`]: dwell/flee times from flow estimates and jump-set design.
//! * [`lyapunov`]: multiple-Lyapunov-function certificates via small LMIs.
//! * [`sim`]: exact piecewise simulation and empirical probes.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod hull;
pub mod lyapunov;
pub mod model;
pub mod numlin;
pub mod par;
pub mod sdp;
pub mod sim;

pub use error::{Error, Result};
pub use par::Execution;
