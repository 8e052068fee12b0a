use crate::error::{Error, Result};
use crate::operators::{check_square, dagger, hermiticity_defect, max_abs, CMatrix, I};

/// Hamiltonian, jump operators and the non-Hermitian generator G = −iH − ½ΣV†V.
#[derive(Clone, Debug)]
pub struct LindbladOperators {
    h: CMatrix,
    jumps: Vec<CMatrix>,
    g: CMatrix,
}

impl LindbladOperators {
    pub fn new(h: CMatrix, jumps: Vec<CMatrix>) -> Result<Self> {
        let d = h.nrows();
        check_square(&h, d)?;
        let defect = hermiticity_defect(&h);
        if defect > 1e-12 * max_abs(&h).max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        let mut g = h.mapv(|z| -I * z);
        for v in &jumps {
            check_square(v, d)?;
            let vv = dagger(v).dot(v);
            g.scaled_add(num_complex::Complex64::new(-0.5, 0.0), &vv);
        }
        Ok(LindbladOperators { h, jumps, g })
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_jumps(&self) -> usize {
        self.jumps.len()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.h
    }

    pub fn jumps(&self) -> &[CMatrix] {
        &self.jumps
    }

    pub fn generator(&self) -> &CMatrix {
        &self.g
    }

    /// L(ρ) = −i[H,ρ] + Σ VρV† − ½{V†V, ρ} = Gρ + ρG† + Σ VρV†.
    pub fn lindbladian(&self, rho: &CMatrix) -> CMatrix {
        let mut out = self.g.dot(rho) + rho.dot(&dagger(&self.g));
        for v in &self.jumps {
            out += &v.dot(rho).dot(&dagger(v));
        }
        out
    }

    /// L*(A) = i[H,A] + Σ V†AV − ½{V†V, A} = G†A + AG + Σ V†AV.
    pub fn adjoint_lindbladian(&self, a: &CMatrix) -> CMatrix {
        let mut out = dagger(&self.g).dot(a) + a.dot(&self.g);
        for v in &self.jumps {
            out += &dagger(v).dot(a).dot(v);
        }
        out
    }
}
