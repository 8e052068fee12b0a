use num_complex::Complex64;

use crate::operators::{dagger, matmul, sandwich, CMatrix, SparseOp};

/// The jump operators in the form used by the channel kernels.
///
/// Operators with few nonzeros use row-compressed products, dense ones use
/// plain matrix products.
#[derive(Clone, Debug)]
pub(crate) struct JumpSet {
    dense: Vec<CMatrix>,
    dense_dag: Vec<CMatrix>,
    sparse: Vec<Option<SparseOp>>,
}

fn is_sparse(op: &SparseOp) -> bool {
    op.nnz() * 4 <= op.dim() * op.dim()
}

impl JumpSet {
    pub fn new(jumps: &[CMatrix]) -> Self {
        let sparse = jumps
            .iter()
            .map(|v| {
                let s = SparseOp::from_dense(v);
                is_sparse(&s).then_some(s)
            })
            .collect();
        JumpSet { dense: jumps.to_vec(), dense_dag: jumps.iter().map(dagger).collect(), sparse }
    }

    pub fn len(&self) -> usize {
        self.dense.len()
    }

    pub fn dense(&self, j: usize) -> &CMatrix {
        &self.dense[j]
    }

    /// out += c · V_j X V_j†
    pub fn sandwich_acc(&self, j: usize, x: &CMatrix, c: Complex64, out: &mut CMatrix) {
        match &self.sparse[j] {
            Some(s) => s.sandwich_acc(x, c, out),
            None => out.scaled_add(c, &sandwich(&self.dense[j], x, &self.dense_dag[j])),
        }
    }

    /// out += c · V_j† X V_j
    pub fn adjoint_sandwich_acc(&self, j: usize, x: &CMatrix, c: Complex64, out: &mut CMatrix) {
        match &self.sparse[j] {
            Some(s) => s.adjoint_sandwich_acc(x, c, out),
            None => out.scaled_add(c, &sandwich(&self.dense_dag[j], x, &self.dense[j])),
        }
    }

    /// X V_j†
    pub fn right_adjoint(&self, j: usize, x: &CMatrix) -> CMatrix {
        match &self.sparse[j] {
            Some(s) => s.right_mul_adjoint(x),
            None => matmul(x, &self.dense_dag[j]),
        }
    }

    /// J(X) = Σ V_j X V_j†
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(x.raw_dim());
        for j in 0..self.len() {
            self.sandwich_acc(j, x, Complex64::new(1.0, 0.0), &mut out);
        }
        out
    }

    /// J*(X) = Σ V_j† X V_j
    pub fn apply_adjoint(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(x.raw_dim());
        for j in 0..self.len() {
            self.adjoint_sandwich_acc(j, x, Complex64::new(1.0, 0.0), &mut out);
        }
        out
    }
}
