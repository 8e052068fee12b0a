use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::PauliAxis;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Spin chain with shared decay (σ⁻) and dephasing (σᶻ) channels on every site.
    LinearDissipator,
    /// One jump operator per site expanded in local Paulis, with one phase fixed per site.
    PauliJump,
}

/// How the linear dissipator's two rates are parameterized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DissipationMode {
    /// Optimize amplitudes s with λ = s²; smooth at λ = 0.
    #[default]
    Amplitude,
    /// Optimize λ directly; V = √λ·σ.
    Strength,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub n_qubits: usize,
    #[serde(default)]
    pub mode: DissipationMode,
}

/// Name of one entry of the parameter vector. Sites are 0-based here and 1-based when printed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symbol {
    Field { site: usize, axis: PauliAxis },
    Coupling { site: usize, a: PauliAxis, b: PauliAxis },
    Rate { index: usize, mode: DissipationMode },
    JumpReal { site: usize, axis: PauliAxis },
    JumpImag { site: usize, axis: PauliAxis },
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Symbol::Field { site, axis } => write!(f, "e[{},{}]", site + 1, axis),
            Symbol::Coupling { site, a, b } => write!(f, "c[{},{},{}]", site + 1, a, b),
            Symbol::Rate { index, mode: DissipationMode::Amplitude } => write!(f, "s{}", index + 1),
            Symbol::Rate { index, mode: DissipationMode::Strength } => write!(f, "lambda{}", index + 1),
            Symbol::JumpReal { site, axis } => write!(f, "d1[{},{}]", site + 1, axis),
            Symbol::JumpImag { site, axis } => write!(f, "d2[{},{}]", site + 1, axis),
        }
    }
}

impl ModelSpec {
    pub fn new(family: Family, n_qubits: usize, mode: DissipationMode) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 8 {
            return Err(Error::InvalidArgument(format!("qubit count {n_qubits} outside 1..=8")));
        }
        Ok(ModelSpec { family, n_qubits, mode })
    }

    pub fn linear_dissipator(n_qubits: usize) -> Self {
        ModelSpec { family: Family::LinearDissipator, n_qubits, mode: DissipationMode::Amplitude }
    }

    pub fn pauli_jump(n_qubits: usize) -> Self {
        ModelSpec { family: Family::PauliJump, n_qubits, mode: DissipationMode::Amplitude }
    }

    pub fn with_mode(mut self, mode: DissipationMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn n_jumps(&self) -> usize {
        match self.family {
            Family::LinearDissipator => 2 * self.n_qubits,
            Family::PauliJump => self.n_qubits,
        }
    }

    /// 3N fields plus 9(N−1) nearest-neighbour couplings.
    pub fn n_hamiltonian_params(&self) -> usize {
        3 * self.n_qubits + 9 * (self.n_qubits - 1)
    }

    pub fn n_dissipative_params(&self) -> usize {
        match self.family {
            Family::LinearDissipator => 2,
            Family::PauliJump => 5 * self.n_qubits,
        }
    }

    pub fn n_params(&self) -> usize {
        self.n_hamiltonian_params() + self.n_dissipative_params()
    }

    /// Fields (site-major, axis-minor), couplings (site, a, b), then the dissipative block.
    pub fn layout(&self) -> Vec<Symbol> {
        let n = self.n_qubits;
        let mut out = Vec::with_capacity(self.n_params());
        for site in 0..n {
            for axis in PauliAxis::ALL {
                out.push(Symbol::Field { site, axis });
            }
        }
        for site in 0..n.saturating_sub(1) {
            for a in PauliAxis::ALL {
                for b in PauliAxis::ALL {
                    out.push(Symbol::Coupling { site, a, b });
                }
            }
        }
        match self.family {
            Family::LinearDissipator => {
                for index in 0..2 {
                    out.push(Symbol::Rate { index, mode: self.mode });
                }
            }
            Family::PauliJump => {
                for site in 0..n {
                    for axis in PauliAxis::ALL {
                        out.push(Symbol::JumpReal { site, axis });
                    }
                    for axis in [PauliAxis::Y, PauliAxis::Z] {
                        out.push(Symbol::JumpImag { site, axis });
                    }
                }
            }
        }
        out
    }

    pub fn layout_labels(&self) -> Vec<String> {
        self.layout().iter().map(ToString::to_string).collect()
    }
}
