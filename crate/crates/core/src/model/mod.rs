//! Parameterized Lindbladian families and their parameter derivatives.

mod builder;
mod ops;
mod params;
mod spec;

pub use builder::{
    build_hamiltonian, build_jumps, operator_derivative, random_true_model, LindbladModel, OperatorDerivative,
};
pub use ops::LindbladOperators;
pub use params::{Dissipation, ModelParameters, ParameterFile, ParameterVector, LAYOUT_SCHEMA_VERSION};
pub use spec::{DissipationMode, Family, ModelSpec, Symbol};
