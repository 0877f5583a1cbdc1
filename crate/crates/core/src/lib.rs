//! Sampling-based piecewise-affine model predictive control for six-degree-of-
//! freedom rendezvous and docking with a tumbling target.
//!
//! The translational plant is written in line-of-sight coordinates and the
//! attitude plant in 3-2-1 Euler angles with reaction wheels. Both are put in
//! a state-dependent linear form, discretised along a nominal trajectory and
//! condensed into one dense QP per controller and step. A randomised sampling
//! correction, whose sign comes from the nonlinear accelerations, nudges the
//! linear predictions toward the nonlinear flow.
//!
//! See the `examples/` directory for one runnable program per capability.

// `!(x > 0.0)` also rejects NaN; index loops mirror the block algebra
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod attitude;
pub mod constraints;
pub mod error;
pub mod integrator;
pub mod los;
pub mod orbit;
pub mod output;
pub mod prediction;
pub mod qp;
pub mod scenario;
pub mod sim;
pub mod target;
pub mod wrap;

pub use error::{Error, Result};
