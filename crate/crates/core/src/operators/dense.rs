use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex square matrix, the storage used for every operator.
pub type CMatrix = Array2<Complex64>;
/// Complex column vector.
pub type CVector = Array1<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// out += alpha·A·B
pub fn matmul_acc(alpha: Complex64, a: &CMatrix, b: &CMatrix, out: &mut CMatrix) {
    general_mat_mul(alpha, a, b, ONE, out);
}

/// A·B
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b)
}

/// A·X·B
pub fn sandwich(a: &CMatrix, x: &CMatrix, b: &CMatrix) -> CMatrix {
    matmul(&matmul(a, x), b)
}

pub fn identity(d: usize) -> CMatrix {
    Array2::from_diag_elem(d, ONE)
}

pub fn zeros(d: usize) -> CMatrix {
    Array2::zeros((d, d))
}

/// Conjugate transpose in standard (row-major) layout.
pub fn dagger(m: &CMatrix) -> CMatrix {
    let (r, c) = m.dim();
    Array2::from_shape_fn((c, r), |(i, j)| m[[j, i]].conj())
}

/// (M + M†)/2.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    let (r, c) = m.dim();
    Array2::from_shape_fn((r, c), |(i, j)| (m[[i, j]] + m[[j, i]].conj()) * 0.5)
}

/// In-place (M + M†)/2.
pub fn hermitize(m: &mut CMatrix) {
    let d = m.nrows();
    for i in 0..d {
        m[[i, i]].im = 0.0;
        for j in (i + 1)..d {
            let v = (m[[i, j]] + m[[j, i]].conj()) * 0.5;
            m[[i, j]] = v;
            m[[j, i]] = v.conj();
        }
    }
}

/// max |M − M†| over entries.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let d = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in i..d {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diag().sum()
}

/// tr(AB) without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let mut acc = ZERO;
    Zip::from(a).and(&b.t()).for_each(|x, y| acc += x * y);
    acc
}

/// Re tr(AB), the Hilbert–Schmidt pairing for Hermitian arguments.
pub fn inner(a: &CMatrix, b: &CMatrix) -> f64 {
    trace_product(a, b).re
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(i, j)| a[[i / br, j / bc]] * b[[i % br, j % bc]])
}

/// |ψ⟩⟨ψ|.
pub fn outer(psi: &CVector) -> CMatrix {
    let d = psi.len();
    Array2::from_shape_fn((d, d), |(i, j)| psi[i] * psi[j].conj())
}

pub fn check_square(m: &CMatrix, expected: usize) -> Result<()> {
    let (r, c) = m.dim();
    if r != expected {
        return Err(Error::DimensionMismatch { expected, found: r });
    }
    if c != expected {
        return Err(Error::DimensionMismatch { expected, found: c });
    }
    Ok(())
}

pub fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}
