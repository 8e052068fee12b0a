use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::ops::LindbladOperators;
use super::params::ParameterVector;
use super::spec::{DissipationMode, Family, ModelSpec, Symbol};
use crate::error::{Error, Result};
use crate::operators::{dagger, embed_local, real, sigma_minus, CMatrix, PauliAxis, I};

/// Derivative of (H, V_j, G) with respect to one real parameter.
#[derive(Clone, Debug)]
pub struct OperatorDerivative {
    pub dh: CMatrix,
    pub dv: Vec<CMatrix>,
    pub dg: CMatrix,
    /// Indices j with nonzero dV_j.
    pub active_jumps: Vec<usize>,
}

/// A model family at fixed size with its embedded single-site and pair operators cached.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    spec: ModelSpec,
    paulis: Vec<[CMatrix; 3]>,
    lowering: Vec<CMatrix>,
    pairs: Vec<[[CMatrix; 3]; 3]>,
}

impl LindbladModel {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        let spec = ModelSpec::new(spec.family, spec.n_qubits, spec.mode)?;
        let n = spec.n_qubits;
        let mut paulis = Vec::with_capacity(n);
        let mut lowering = Vec::with_capacity(n);
        for s in 0..n {
            paulis.push([
                embed_local(&PauliAxis::X.matrix(), s, n)?,
                embed_local(&PauliAxis::Y.matrix(), s, n)?,
                embed_local(&PauliAxis::Z.matrix(), s, n)?,
            ]);
            lowering.push(embed_local(&sigma_minus(), s, n)?);
        }
        let pairs = (0..n.saturating_sub(1))
            .map(|s| std::array::from_fn(|a| std::array::from_fn(|b| paulis[s][a].dot(&paulis[s + 1][b]))))
            .collect();
        Ok(LindbladModel { spec, paulis, lowering, pairs })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn pauli(&self, site: usize, axis: PauliAxis) -> &CMatrix {
        &self.paulis[site][axis.index()]
    }

    fn check(&self, theta: &ParameterVector) -> Result<()> {
        if theta.spec() != &self.spec {
            return Err(Error::Mismatch("parameter vector belongs to a different model".into()));
        }
        Ok(())
    }

    pub fn hamiltonian(&self, theta_h: &[f64]) -> Result<CMatrix> {
        let expected = self.spec.n_hamiltonian_params();
        if theta_h.len() != expected {
            return Err(Error::ParameterCount { expected, found: theta_h.len() });
        }
        let n = self.spec.n_qubits;
        let d = self.spec.dim();
        let mut h = CMatrix::zeros((d, d));
        for s in 0..n {
            for a in 0..3 {
                let c = theta_h[3 * s + a];
                if c != 0.0 {
                    h.scaled_add(real(c), &self.paulis[s][a]);
                }
            }
        }
        for s in 0..n.saturating_sub(1) {
            for a in 0..3 {
                for b in 0..3 {
                    let c = theta_h[3 * n + 9 * s + 3 * a + b];
                    if c != 0.0 {
                        h.scaled_add(real(c), &self.pairs[s][a][b]);
                    }
                }
            }
        }
        Ok(h)
    }

    pub fn jumps(&self, theta_d: &[f64]) -> Result<Vec<CMatrix>> {
        let expected = self.spec.n_dissipative_params();
        if theta_d.len() != expected {
            return Err(Error::ParameterCount { expected, found: theta_d.len() });
        }
        let n = self.spec.n_qubits;
        match self.spec.family {
            Family::LinearDissipator => {
                let amp = |i: usize| -> Result<f64> {
                    let v = theta_d[i];
                    match self.spec.mode {
                        DissipationMode::Amplitude => Ok(v),
                        DissipationMode::Strength if v < 0.0 => {
                            Err(Error::NegativeStrength { name: format!("lambda{}", i + 1), value: v })
                        }
                        DissipationMode::Strength => Ok(v.sqrt()),
                    }
                };
                let (a1, a2) = (amp(0)?, amp(1)?);
                let mut out: Vec<CMatrix> = self.lowering.iter().map(|m| m * real(a1)).collect();
                out.extend(self.paulis.iter().map(|p| &p[2] * real(a2)));
                Ok(out)
            }
            Family::PauliJump => Ok((0..n)
                .map(|s| {
                    let b = 5 * s;
                    let coef = [
                        real(theta_d[b]),
                        Complex64::new(theta_d[b + 1], theta_d[b + 3]),
                        Complex64::new(theta_d[b + 2], theta_d[b + 4]),
                    ];
                    let mut v = &self.paulis[s][0] * coef[0];
                    v.scaled_add(coef[1], &self.paulis[s][1]);
                    v.scaled_add(coef[2], &self.paulis[s][2]);
                    v
                })
                .collect()),
        }
    }

    pub fn operators(&self, theta: &ParameterVector) -> Result<LindbladOperators> {
        self.check(theta)?;
        let h = self.hamiltonian(theta.hamiltonian_slice())?;
        let v = self.jumps(theta.dissipative_slice())?;
        LindbladOperators::new(h, v)
    }

    /// Analytic derivative of (H, V, G) with respect to θ_α at θ; `jumps` must be V(θ).
    pub fn derivative_with(
        &self,
        theta: &ParameterVector,
        jumps: &[CMatrix],
        alpha: usize,
    ) -> Result<OperatorDerivative> {
        self.check(theta)?;
        let layout = self.spec.layout();
        let symbol = *layout.get(alpha).ok_or(Error::ParameterIndex { index: alpha, len: layout.len() })?;
        let d = self.spec.dim();
        let n = self.spec.n_qubits;
        let nv = self.spec.n_jumps();
        let mut dh = CMatrix::zeros((d, d));
        let mut dv = vec![CMatrix::zeros((d, d)); nv];
        let mut active = Vec::new();
        match symbol {
            Symbol::Field { site, axis } => dh.assign(&self.paulis[site][axis.index()]),
            Symbol::Coupling { site, a, b } => dh.assign(&self.pairs[site][a.index()][b.index()]),
            Symbol::Rate { index, mode } => {
                let scale = match mode {
                    DissipationMode::Amplitude => 1.0,
                    DissipationMode::Strength => {
                        let lambda = theta.dissipative_slice()[index];
                        if lambda <= 0.0 {
                            return Err(Error::SingularStrengthDerivative { name: format!("lambda{}", index + 1) });
                        }
                        0.5 / lambda.sqrt()
                    }
                };
                for s in 0..n {
                    let j = index * n + s;
                    let base = if index == 0 { &self.lowering[s] } else { &self.paulis[s][2] };
                    dv[j] = base * real(scale);
                    active.push(j);
                }
            }
            Symbol::JumpReal { site, axis } => {
                dv[site] = self.paulis[site][axis.index()].clone();
                active.push(site);
            }
            Symbol::JumpImag { site, axis } => {
                dv[site] = &self.paulis[site][axis.index()] * I;
                active.push(site);
            }
        }
        let mut dg = dh.mapv(|z| -I * z);
        for &j in &active {
            let t = dagger(&dv[j]).dot(&jumps[j]);
            // dV†V + V†dV = T + T†
            dg.scaled_add(real(-0.5), &t);
            dg.scaled_add(real(-0.5), &dagger(&t));
        }
        Ok(OperatorDerivative { dh, dv, dg, active_jumps: active })
    }

    pub fn derivative(&self, theta: &ParameterVector, alpha: usize) -> Result<OperatorDerivative> {
        let jumps = self.jumps(theta.dissipative_slice())?;
        self.derivative_with(theta, &jumps, alpha)
    }
}

/// H = Σ e σ + Σ c σσ (open chain).
pub fn build_hamiltonian(theta_h: &[f64], n_qubits: usize) -> Result<CMatrix> {
    LindbladModel::new(ModelSpec::linear_dissipator(n_qubits))?.hamiltonian(theta_h)
}

pub fn build_jumps(theta_d: &[f64], spec: &ModelSpec) -> Result<Vec<CMatrix>> {
    LindbladModel::new(*spec)?.jumps(theta_d)
}

pub fn operator_derivative(spec: &ModelSpec, theta: &ParameterVector, alpha: usize) -> Result<OperatorDerivative> {
    LindbladModel::new(*spec)?.derivative(theta, alpha)
}

/// Gaussian Hamiltonian couplings; folded-Gaussian rates or complex Gaussian Pauli coefficients.
pub fn random_true_model(seed: u64, spec: &ModelSpec) -> ParameterVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(spec.n_params());
    for _ in 0..spec.n_hamiltonian_params() {
        values.push(rng.sample::<f64, _>(StandardNormal));
    }
    match spec.family {
        Family::LinearDissipator => {
            for _ in 0..2 {
                let lambda = rng.sample::<f64, _>(StandardNormal).abs();
                values.push(match spec.mode {
                    DissipationMode::Amplitude => lambda.sqrt(),
                    DissipationMode::Strength => lambda,
                });
            }
        }
        Family::PauliJump => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            for _ in 0..spec.n_dissipative_params() {
                values.push(s * rng.sample::<f64, _>(StandardNormal));
            }
        }
    }
    ParameterVector::new(*spec, values).expect("layout length by construction")
}
