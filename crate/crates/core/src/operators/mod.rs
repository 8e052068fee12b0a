//! Dense complex operators, Pauli constructions, LU and Hermitian eigenvalues.

mod dense;
mod density;
mod eigen;
mod lu;
mod pauli;
mod sparse;

pub use dense::*;
pub use density::DensityMatrix;
pub use eigen::{eigenvalues_hermitian, eigenvalues_symmetric, min_eigenvalue_hermitian, spectral_norm_hermitian};
pub use lu::{lu_factor, lu_solve, LuFactorization};
pub use pauli::{
    embed_local, expectation, observable_basis, pauli_string, sigma_minus, BasisKind, Observable, PauliAxis,
};
pub use sparse::SparseOp;
