//! Levenberg–Marquardt and convergence-rate diagnostics.

mod lm;
mod rate;

pub use lm::{
    cholesky_solve, lm_run, lm_step, IterationRecord, LeastSquares, LmHistory, LmOptions, LmOutcome, NuRule,
    Termination,
};
pub use rate::{rate_diagnostics, RateReport, ERROR_FLOOR};
