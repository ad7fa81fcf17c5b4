//! Finite-element toolkit for two-phase quasilinear conductivity problems.
//!
//! The forward problem is posed as the minimization of a Dirichlet energy
//! `∫_B Q_B(x, |∇u|) + ∫_A Q_A(x, |∇u|)` over P1 fields with prescribed
//! boundary voltage. On top of the solver sit the large-data limit
//! experiments: λ-sweeps of the normalized functional, the PEC/PEI limit
//! problems, runtime checks of the a-priori bounds, and the oscillating
//! density driver showing what fails when the asymptotic growth assumption
//! is dropped.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments
)]

pub mod energy;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod io;
pub mod limit_lab;
pub mod solver;

pub use error::{Error, Result};

/// A point of the plane.
pub type Point = [f64; 2];
