use std::hash::{DefaultHasher, Hash, Hasher};

use num_complex::Complex64;

use super::dense::{identity, CMatrix, CVector};
use crate::error::{Error, Result};

/// Partial-pivoting LU factorization `P M = L U`, stored packed.
#[derive(Clone, Debug)]
pub struct LuFactorization {
    lu: CMatrix,
    perm: Vec<usize>,
    tag: u64,
}

fn fingerprint(m: &CMatrix) -> u64 {
    let mut h = DefaultHasher::new();
    m.nrows().hash(&mut h);
    for z in m.iter() {
        z.re.to_bits().hash(&mut h);
        z.im.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Factorizes `m`; a pivot below `1e-14·‖m‖∞` is reported as singular.
pub fn lu_factor(m: &CMatrix) -> Result<LuFactorization> {
    let d = m.nrows();
    if m.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: m.ncols() });
    }
    let norm = (0..d).map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let threshold = 1e-14 * norm;
    let mut lu = m.as_standard_layout().into_owned();
    let mut perm: Vec<usize> = (0..d).collect();
    for k in 0..d {
        let (p, mag) =
            (k..d).map(|i| (i, lu[[i, k]].norm())).fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if mag <= threshold || mag == 0.0 {
            return Err(Error::Singular { pivot: k, magnitude: mag });
        }
        if p != k {
            for j in 0..d {
                lu.swap([k, j], [p, j]);
            }
            perm.swap(k, p);
        }
        let pivot = lu[[k, k]];
        for i in (k + 1)..d {
            let f = lu[[i, k]] / pivot;
            lu[[i, k]] = f;
            if f != Complex64::new(0.0, 0.0) {
                for j in (k + 1)..d {
                    let u = lu[[k, j]];
                    lu[[i, j]] -= f * u;
                }
            }
        }
    }
    Ok(LuFactorization { lu, perm, tag: fingerprint(m) })
}

/// Solves `M X = B` for every column of `B`.
pub fn lu_solve(f: &LuFactorization, b: &CMatrix) -> Result<CMatrix> {
    f.solve(b)
}

impl LuFactorization {
    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Fingerprint of the factorized matrix.
    pub fn tag(&self) -> u64 {
        self.tag
    }

    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix> {
        let d = self.dim();
        if b.nrows() != d {
            return Err(Error::DimensionMismatch { expected: d, found: b.nrows() });
        }
        let mut x = CMatrix::zeros(b.raw_dim());
        for (i, &p) in self.perm.iter().enumerate() {
            x.row_mut(i).assign(&b.row(p));
        }
        for i in 0..d {
            for k in 0..i {
                let l = self.lu[[i, k]];
                if l != Complex64::new(0.0, 0.0) {
                    let (head, mut tail) = x.view_mut().split_at(ndarray::Axis(0), i);
                    tail.row_mut(0).scaled_add(-l, &head.row(k));
                }
            }
        }
        for i in (0..d).rev() {
            for k in (i + 1)..d {
                let u = self.lu[[i, k]];
                if u != Complex64::new(0.0, 0.0) {
                    let (mut head, tail) = x.view_mut().split_at(ndarray::Axis(0), i + 1);
                    head.row_mut(i).scaled_add(-u, &tail.row(k - i - 1));
                }
            }
            let inv = Complex64::new(1.0, 0.0) / self.lu[[i, i]];
            x.row_mut(i).mapv_inplace(|z| z * inv);
        }
        Ok(x)
    }

    pub fn solve_vec(&self, b: &CVector) -> Result<CVector> {
        let d = self.dim();
        if b.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: b.len() });
        }
        let mut x: CVector = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..d {
            let mut acc = x[i];
            for k in 0..i {
                acc -= self.lu[[i, k]] * x[k];
            }
            x[i] = acc;
        }
        for i in (0..d).rev() {
            let mut acc = x[i];
            for k in (i + 1)..d {
                acc -= self.lu[[i, k]] * x[k];
            }
            x[i] = acc / self.lu[[i, i]];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> CMatrix {
        self.solve(&identity(self.dim())).expect("square identity matches")
    }
}
