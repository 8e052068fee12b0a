//! Completely positive Kraus-form integrators and trajectory evolution.

mod evolve;
mod jumps;
mod kraus;

pub use evolve::{ehrenfest_residual, evolve_expectations, evolve_expectations_at, evolve_trajectory, Trajectory};
pub use kraus::{apply_kraus_list, apply_kraus_list_adjoint, kraus_first_order, kraus_second_order, KrausMap, Scheme};
