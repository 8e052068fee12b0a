use std::fmt;

use ndarray::array;
use serde::{Deserialize, Serialize};

use super::dense::{check_square, hermiticity_defect, identity, CMatrix, I, ONE, ZERO};
use super::density::DensityMatrix;
use super::sparse::SparseOp;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

    pub fn index(self) -> usize {
        match self {
            PauliAxis::X => 0,
            PauliAxis::Y => 1,
            PauliAxis::Z => 2,
        }
    }

    pub fn matrix(self) -> CMatrix {
        match self {
            PauliAxis::X => array![[ZERO, ONE], [ONE, ZERO]],
            PauliAxis::Y => array![[ZERO, -I], [I, ZERO]],
            PauliAxis::Z => array![[ONE, ZERO], [ZERO, -ONE]],
        }
    }

    pub fn symbol(self) -> char {
        match self {
            PauliAxis::X => 'x',
            PauliAxis::Y => 'y',
            PauliAxis::Z => 'z',
        }
    }
}

impl fmt::Display for PauliAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// σ⁻ = |1⟩⟨0|, lowering from the spin-up state |0⟩.
pub fn sigma_minus() -> CMatrix {
    array![[ZERO, ZERO], [ONE, ZERO]]
}

/// `I^{⊗site} ⊗ op ⊗ I^{⊗(n−site−1)}`; site 0 is the leftmost factor.
pub fn embed_local(op: &CMatrix, site: usize, n_qubits: usize) -> Result<CMatrix> {
    check_square(op, 2)?;
    if site >= n_qubits {
        return Err(Error::SiteOutOfRange { site, n_qubits });
    }
    let d = 1usize << n_qubits;
    let shift = n_qubits - 1 - site;
    let mut out = CMatrix::zeros((d, d));
    for a in 0..d {
        let ba = (a >> shift) & 1;
        for bb in 0..2 {
            let v = op[[ba, bb]];
            if v != ZERO {
                let b = (a & !(1 << shift)) | (bb << shift);
                out[[a, b]] = v;
            }
        }
    }
    Ok(out)
}

/// A Hermitian measured operator with a printable label.
#[derive(Clone, Debug)]
pub struct Observable {
    op: CMatrix,
    label: String,
    sparse: SparseOp,
}

impl Observable {
    pub fn new(op: CMatrix, label: impl Into<String>) -> Result<Self> {
        let d = op.nrows();
        check_square(&op, d)?;
        let defect = hermiticity_defect(&op);
        if defect > 1e-12 {
            return Err(Error::NotHermitian(defect));
        }
        let sparse = SparseOp::from_dense(&op);
        Ok(Observable { op, label: label.into(), sparse })
    }

    pub fn op(&self) -> &CMatrix {
        &self.op
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.op.nrows()
    }

    pub fn sparse(&self) -> &SparseOp {
        &self.sparse
    }

    /// tr(A X) for an arbitrary operator X.
    pub fn trace_with(&self, x: &CMatrix) -> num_complex::Complex64 {
        self.sparse.trace_product(x)
    }
}

/// Re tr(Aρ); fails if the imaginary part exceeds 1e-10.
pub fn expectation(a: &Observable, rho: &DensityMatrix) -> Result<f64> {
    let d = a.dim();
    if rho.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: rho.dim() });
    }
    let v = a.trace_with(rho.op());
    if v.im.abs() > 1e-10 {
        return Err(Error::ComplexExpectation(v.im));
    }
    Ok(v.re)
}

/// Product of embedded Paulis, labelled like `x1z2` with 1-based sites; `I` for the empty string.
pub fn pauli_string(sites: &[usize], axes: &[PauliAxis], n_qubits: usize) -> Result<Observable> {
    if sites.len() != axes.len() {
        return Err(Error::LengthMismatch { sites: sites.len(), axes: axes.len() });
    }
    let mut pairs: Vec<(usize, PauliAxis)> = sites.iter().copied().zip(axes.iter().copied()).collect();
    pairs.sort();
    for w in pairs.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::DuplicateSite(w[0].0));
        }
    }
    let d = 1usize << n_qubits;
    let mut op = identity(d);
    let mut label = String::new();
    for &(site, axis) in &pairs {
        let p = embed_local(&axis.matrix(), site, n_qubits)?;
        op = op.dot(&p);
        label.push_str(&format!("{}{}", axis.symbol(), site + 1));
    }
    if label.is_empty() {
        label.push('I');
    }
    Observable::new(op, label)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    OneLocal,
    TwoLocal,
    XyOneLocal,
}

impl BasisKind {
    pub fn count(self, n: usize) -> usize {
        match self {
            BasisKind::OneLocal => 3 * n + 1,
            BasisKind::TwoLocal => 1 + 3 * n + 9 * n * (n - 1) / 2,
            BasisKind::XyOneLocal => 2 * n,
        }
    }
}

/// Observable sets used as measurement data. Pairs in the two-local set range over all distinct sites.
pub fn observable_basis(kind: BasisKind, n_qubits: usize) -> Result<Vec<Observable>> {
    if n_qubits == 0 {
        return Err(Error::InvalidArgument("observable basis needs at least one qubit".into()));
    }
    let mut out = Vec::with_capacity(kind.count(n_qubits));
    let singles = |out: &mut Vec<Observable>, axes: &[PauliAxis]| -> Result<()> {
        for s in 0..n_qubits {
            for &a in axes {
                out.push(pauli_string(&[s], &[a], n_qubits)?);
            }
        }
        Ok(())
    };
    match kind {
        BasisKind::OneLocal => {
            out.push(pauli_string(&[], &[], n_qubits)?);
            singles(&mut out, &PauliAxis::ALL)?;
        }
        BasisKind::TwoLocal => {
            out.push(pauli_string(&[], &[], n_qubits)?);
            singles(&mut out, &PauliAxis::ALL)?;
            for i in 0..n_qubits {
                for j in (i + 1)..n_qubits {
                    for a in PauliAxis::ALL {
                        for b in PauliAxis::ALL {
                            out.push(pauli_string(&[i, j], &[a, b], n_qubits)?);
                        }
                    }
                }
            }
        }
        BasisKind::XyOneLocal => singles(&mut out, &[PauliAxis::X, PauliAxis::Y])?,
    }
    Ok(out)
}
