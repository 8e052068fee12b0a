use num_complex::Complex64;

use super::dense::{check_square, hermiticity_defect, hermitize, identity, max_abs, outer, trace, CMatrix, CVector};
use super::eigen::min_eigenvalue_hermitian;
use crate::error::{Error, Result};

/// A Hermitian density operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Wraps `op`, rejecting non-square or visibly non-Hermitian input.
    pub fn new(op: CMatrix) -> Result<Self> {
        let d = op.nrows();
        check_square(&op, d)?;
        let defect = hermiticity_defect(&op);
        if defect > 1e-10 * max_abs(&op).max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        let mut op = op;
        hermitize(&mut op);
        Ok(DensityMatrix(op))
    }

    /// Wraps an operator already known to be Hermitian.
    pub(crate) fn from_hermitian(op: CMatrix) -> Self {
        DensityMatrix(op)
    }

    pub fn pure(psi: &CVector) -> Self {
        DensityMatrix(outer(psi))
    }

    pub fn basis_state(index: usize, dim: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidArgument(format!("basis index {index} for dimension {dim}")));
        }
        let mut op = CMatrix::zeros((dim, dim));
        op[[index, index]] = Complex64::new(1.0, 0.0);
        Ok(DensityMatrix(op))
    }

    /// Product state with every spin up, |0…0⟩.
    pub fn all_up(n_qubits: usize) -> Self {
        DensityMatrix::basis_state(0, 1 << n_qubits).expect("index 0 is valid")
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(identity(dim) / Complex64::new(dim as f64, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn op(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_op(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        trace(&self.0).re
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        min_eigenvalue_hermitian(&self.0)
    }
}
