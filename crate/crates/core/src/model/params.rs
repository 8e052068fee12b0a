use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spec::{DissipationMode, Family, ModelSpec};
use crate::error::{Error, Result};

/// Version of the parameter file layout.
pub const LAYOUT_SCHEMA_VERSION: u32 = 1;

/// Flat real parameter vector tied to the model it parameterizes.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterVector {
    spec: ModelSpec,
    values: Vec<f64>,
}

/// Structured view of a parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParameters {
    /// e[site][axis]
    pub fields: Vec<[f64; 3]>,
    /// c[site][a][b] for sites 0..N−1
    pub couplings: Vec<[[f64; 3]; 3]>,
    pub dissipation: Dissipation,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Dissipation {
    /// Decay and dephasing rate parameters (amplitudes or strengths, per the mode).
    Linear { decay: f64, dephasing: f64 },
    /// Complex Pauli coefficients per site; the x coefficient is real.
    Pauli { coefficients: Vec<[Complex64; 3]> },
}

impl ParameterVector {
    pub fn new(spec: ModelSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.n_params() {
            return Err(Error::ParameterCount { expected: spec.n_params(), found: values.len() });
        }
        Ok(ParameterVector { spec, values })
    }

    pub fn zeros(spec: ModelSpec) -> Self {
        ParameterVector { values: vec![0.0; spec.n_params()], spec }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn hamiltonian_slice(&self) -> &[f64] {
        &self.values[..self.spec.n_hamiltonian_params()]
    }

    pub fn dissipative_slice(&self) -> &[f64] {
        &self.values[self.spec.n_hamiltonian_params()..]
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        ParameterVector::new(self.spec, values)
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &ParameterVector) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn unpack(&self) -> ModelParameters {
        let n = self.spec.n_qubits;
        let v = &self.values;
        let fields = (0..n).map(|s| [v[3 * s], v[3 * s + 1], v[3 * s + 2]]).collect();
        let off = 3 * n;
        let couplings = (0..n - 1)
            .map(|s| {
                let b = off + 9 * s;
                let mut c = [[0.0; 3]; 3];
                for (a, row) in c.iter_mut().enumerate() {
                    row.copy_from_slice(&v[b + 3 * a..b + 3 * a + 3]);
                }
                c
            })
            .collect();
        let d = &v[self.spec.n_hamiltonian_params()..];
        let dissipation = match self.spec.family {
            Family::LinearDissipator => Dissipation::Linear { decay: d[0], dephasing: d[1] },
            Family::PauliJump => Dissipation::Pauli {
                coefficients: (0..n)
                    .map(|s| {
                        let b = 5 * s;
                        [
                            Complex64::new(d[b], 0.0),
                            Complex64::new(d[b + 1], d[b + 3]),
                            Complex64::new(d[b + 2], d[b + 4]),
                        ]
                    })
                    .collect(),
            },
        };
        ModelParameters { fields, couplings, dissipation }
    }

    /// Inverse of [`ParameterVector::unpack`]. The imaginary x coefficient must vanish.
    pub fn pack(spec: ModelSpec, p: &ModelParameters) -> Result<Self> {
        let n = spec.n_qubits;
        if p.fields.len() != n || p.couplings.len() != n - 1 {
            return Err(Error::InvalidArgument("structured parameters do not match the qubit count".into()));
        }
        let mut values = Vec::with_capacity(spec.n_params());
        for f in &p.fields {
            values.extend_from_slice(f);
        }
        for c in &p.couplings {
            for row in c {
                values.extend_from_slice(row);
            }
        }
        match (&p.dissipation, spec.family) {
            (Dissipation::Linear { decay, dephasing }, Family::LinearDissipator) => {
                values.push(*decay);
                values.push(*dephasing);
            }
            (Dissipation::Pauli { coefficients }, Family::PauliJump) if coefficients.len() == n => {
                for c in coefficients {
                    if c[0].im != 0.0 {
                        return Err(Error::InvalidArgument("gauge-fixed imaginary x coefficient must be zero".into()));
                    }
                    values.extend_from_slice(&[c[0].re, c[1].re, c[2].re, c[1].im, c[2].im]);
                }
            }
            _ => return Err(Error::InvalidArgument("dissipation block does not match the model family".into())),
        }
        ParameterVector::new(spec, values)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ParameterFile::from(self);
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ParameterFile = serde_json::from_str(text)?;
        file.try_into()
    }
}

/// On-disk form of a parameter vector; carries its own layout.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParameterFile {
    pub schema_version: u32,
    pub family: Family,
    pub n_qubits: usize,
    #[serde(default)]
    pub mode: DissipationMode,
    pub layout: Vec<String>,
    pub values: Vec<f64>,
}

impl From<&ParameterVector> for ParameterFile {
    fn from(p: &ParameterVector) -> Self {
        ParameterFile {
            schema_version: LAYOUT_SCHEMA_VERSION,
            family: p.spec.family,
            n_qubits: p.spec.n_qubits,
            mode: p.spec.mode,
            layout: p.spec.layout_labels(),
            values: p.values.clone(),
        }
    }
}

impl TryFrom<ParameterFile> for ParameterVector {
    type Error = Error;

    fn try_from(file: ParameterFile) -> Result<Self> {
        if file.schema_version != LAYOUT_SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported parameter schema version {}",
                file.schema_version
            )));
        }
        let spec = ModelSpec::new(file.family, file.n_qubits, file.mode)?;
        if file.layout != spec.layout_labels() {
            return Err(Error::InvalidArgument("parameter layout does not match the model".into()));
        }
        ParameterVector::new(spec, file.values)
    }
}
