use num_complex::Complex64;

use super::dense::{CMatrix, ZERO};

/// Row-compressed copy of a dense operator.
///
/// Local jump operators and parameter derivatives have O(d) nonzeros, so
/// products against dense matrices are far cheaper in this form.
#[derive(Clone, Debug)]
pub struct SparseOp {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
    /// Set when every row has at most one nonzero: (column, value) per row, value 0 for empty rows.
    mono: Option<(Vec<usize>, Vec<Complex64>)>,
}

impl SparseOp {
    pub fn from_dense(m: &CMatrix) -> Self {
        let dim = m.nrows();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            for j in 0..dim {
                let v = m[[i, j]];
                if v != ZERO {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        let mono = (0..dim).all(|i| row_ptr[i + 1] - row_ptr[i] <= 1).then(|| {
            (0..dim)
                .map(|i| if row_ptr[i + 1] > row_ptr[i] { (cols[row_ptr[i]], vals[row_ptr[i]]) } else { (0, ZERO) })
                .unzip()
        });
        SparseOp { dim, row_ptr, cols, vals, mono }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_zero(&self) -> bool {
        self.vals.is_empty()
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut out = CMatrix::zeros((self.dim, self.dim));
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                out[[i, j]] = v;
            }
        }
        out
    }

    /// out += c · S X
    pub fn left_mul_acc(&self, x: &CMatrix, c: Complex64, out: &mut CMatrix) {
        let d = self.dim;
        let x = x.as_standard_layout();
        let xs = x.as_slice().expect("standard layout");
        let os = out.as_slice_mut().expect("standard layout");
        for i in 0..d {
            let orow = &mut os[i * d..(i + 1) * d];
            for (k, v) in self.row(i) {
                let s = v * c;
                for (o, xv) in orow.iter_mut().zip(&xs[k * d..(k + 1) * d]) {
                    *o += s * xv;
                }
            }
        }
    }

    /// out += c · S† X
    pub fn adjoint_left_mul_acc(&self, x: &CMatrix, c: Complex64, out: &mut CMatrix) {
        let d = self.dim;
        let x = x.as_standard_layout();
        let xs = x.as_slice().expect("standard layout");
        let os = out.as_slice_mut().expect("standard layout");
        for k in 0..d {
            let xrow = &xs[k * d..(k + 1) * d];
            for (i, v) in self.row(k) {
                let s = v.conj() * c;
                for (o, xv) in os[i * d..(i + 1) * d].iter_mut().zip(xrow) {
                    *o += s * xv;
                }
            }
        }
    }

    /// out += c · X S†
    pub fn right_mul_adjoint_acc(&self, x: &CMatrix, c: Complex64, out: &mut CMatrix) {
        let d = self.dim;
        let x = x.as_standard_layout();
        let xs = x.as_slice().expect("standard layout");
        let os = out.as_slice_mut().expect("standard layout");
        for b in 0..d {
            let (lo, hi) = (self.row_ptr[b], self.row_ptr[b + 1]);
            for idx in lo..hi {
                let e = self.cols[idx];
                let s = self.vals[idx].conj() * c;
                for a in 0..d {
                    os[a * d + b] += xs[a * d + e] * s;
                }
            }
        }
    }

    /// out += c · X S
    pub fn right_mul_acc(&self, x: &CMatrix, c: Complex64, out: &mut CMatrix) {
        let d = self.dim;
        let x = x.as_standard_layout();
        let xs = x.as_slice().expect("standard layout");
        let os = out.as_slice_mut().expect("standard layout");
        for k in 0..d {
            for (j, v) in self.row(k) {
                let s = v * c;
                for a in 0..d {
                    os[a * d + j] += xs[a * d + k] * s;
                }
            }
        }
    }

    pub fn left_mul(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(x.raw_dim());
        self.left_mul_acc(x, Complex64::new(1.0, 0.0), &mut out);
        out
    }

    pub fn right_mul_adjoint(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(x.raw_dim());
        self.right_mul_adjoint_acc(x, Complex64::new(1.0, 0.0), &mut out);
        out
    }

    pub fn right_mul(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(x.raw_dim());
        self.right_mul_acc(x, Complex64::new(1.0, 0.0), &mut out);
        out
    }

    /// out += c · S X S†
    pub fn sandwich_acc(&self, x: &CMatrix, c: Complex64, out: &mut CMatrix) {
        let d = self.dim;
        let x = x.as_standard_layout();
        let xs = x.as_slice().expect("standard layout");
        let os = out.as_slice_mut().expect("standard layout");
        if let Some((mc, mv)) = &self.mono {
            let conj: Vec<Complex64> = mv.iter().map(|v| v.conj()).collect();
            for a in 0..d {
                if mv[a] == ZERO {
                    continue;
                }
                let f = mv[a] * c;
                let xrow = &xs[mc[a] * d..(mc[a] + 1) * d];
                for ((o, &kb), &sb) in os[a * d..(a + 1) * d].iter_mut().zip(mc).zip(&conj) {
                    *o += f * sb * xrow[kb];
                }
            }
            return;
        }
        for a in 0..d {
            let orow = &mut os[a * d..(a + 1) * d];
            for (k, sak) in self.row(a) {
                let f = sak * c;
                let xrow = &xs[k * d..(k + 1) * d];
                for (b, o) in orow.iter_mut().enumerate() {
                    let mut acc = ZERO;
                    for idx in self.row_ptr[b]..self.row_ptr[b + 1] {
                        acc += xrow[self.cols[idx]] * self.vals[idx].conj();
                    }
                    *o += f * acc;
                }
            }
        }
    }

    /// out += c · S† X S
    pub fn adjoint_sandwich_acc(&self, x: &CMatrix, c: Complex64, out: &mut CMatrix) {
        let d = self.dim;
        let x = x.as_standard_layout();
        let xs = x.as_slice().expect("standard layout");
        let os = out.as_slice_mut().expect("standard layout");
        // (S†XS)[i,j] = Σ_{k,l} conj(S[k,i]) X[k,l] S[l,j]
        if let Some((mc, mv)) = &self.mono {
            for k in 0..d {
                if mv[k] == ZERO {
                    continue;
                }
                let f = mv[k].conj() * c;
                let row = mc[k] * d;
                for ((&xkl, &cl), &sl) in xs[k * d..(k + 1) * d].iter().zip(mc).zip(mv) {
                    os[row + cl] += f * sl * xkl;
                }
            }
            return;
        }
        for k in 0..d {
            let xrow = &xs[k * d..(k + 1) * d];
            for (i, ski) in self.row(k) {
                let f = ski.conj() * c;
                let orow = &mut os[i * d..(i + 1) * d];
                for (l, &xkl) in xrow.iter().enumerate() {
                    if xkl == ZERO {
                        continue;
                    }
                    let g = f * xkl;
                    for idx in self.row_ptr[l]..self.row_ptr[l + 1] {
                        orow[self.cols[idx]] += g * self.vals[idx];
                    }
                }
            }
        }
    }

    /// tr(S X)
    pub fn trace_product(&self, x: &CMatrix) -> Complex64 {
        let mut acc = ZERO;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                acc += v * x[[j, i]];
            }
        }
        acc
    }
}
