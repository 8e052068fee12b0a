//! Simulation and identification of Lindblad dynamics.
//!
//! Density matrices are propagated with completely positive Kraus-form
//! integrators of first and second order. The residuals between simulated and
//! measured expectations are differentiated exactly (adjoint and forward
//! sensitivities of the discrete map) and minimized with Levenberg–Marquardt.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod learning;
pub mod model;
pub mod operators;
pub mod optimizer;
pub mod propagator;
pub mod unraveling;

pub use error::{Error, Result};
