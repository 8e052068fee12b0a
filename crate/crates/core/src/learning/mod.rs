//! Residuals, exact gradients and Jacobians of the discrete simulation with respect to θ.

mod cotangent;
mod dataset;
mod derivative;
mod forward;
mod problem;

pub use dataset::{step_ratio, MeasurementDataset, ResidualVector, SimSettings};
pub use derivative::{kraus_parameter_derivative, SparseDerivative};
pub use problem::{gradient_backprop, jacobian, objective, residuals, JacobianMethod, LearningProblem};
