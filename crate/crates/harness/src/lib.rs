//! Configuration, synthetic data, identification runs, canned experiments and self-checks
//! for learning Lindblad generators from expectation-value time series.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod figures;
pub mod simulate;
pub mod verify;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
