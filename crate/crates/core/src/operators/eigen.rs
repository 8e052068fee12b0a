use nalgebra::DMatrix;

use super::dense::{hermiticity_defect, max_abs, CMatrix};
use crate::error::{Error, Result};

/// Eigenvalues of a Hermitian operator in ascending order.
pub fn eigenvalues_hermitian(m: &CMatrix) -> Result<Vec<f64>> {
    let d = m.nrows();
    if m.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: m.ncols() });
    }
    let defect = hermiticity_defect(m);
    if defect > 1e-10 * max_abs(m).max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    let nm = DMatrix::from_fn(d, d, |i, j| m[[i, j]]);
    let mut ev: Vec<f64> = nm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

pub fn min_eigenvalue_hermitian(m: &CMatrix) -> Result<f64> {
    Ok(eigenvalues_hermitian(m)?[0])
}

/// Largest absolute eigenvalue of a Hermitian operator (its 2-norm).
pub fn spectral_norm_hermitian(m: &CMatrix) -> Result<f64> {
    let ev = eigenvalues_hermitian(m)?;
    Ok(ev[0].abs().max(ev[ev.len() - 1].abs()))
}

/// Eigenvalues of a real symmetric matrix in ascending order.
pub fn eigenvalues_symmetric(m: &ndarray::Array2<f64>) -> Vec<f64> {
    let d = m.nrows();
    let nm = DMatrix::from_fn(d, d, |i, j| 0.5 * (m[[i, j]] + m[[j, i]]));
    let mut ev: Vec<f64> = nm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}
