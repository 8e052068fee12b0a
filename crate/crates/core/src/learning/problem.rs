use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cotangent::{accumulate, Cotangent, Left, Right};
use super::dataset::{MeasurementDataset, ResidualVector, SimSettings};
use super::derivative::SparseDerivative;
use super::forward::{sensitivity_step, StepFactors};
use crate::error::{Error, Result};
use crate::model::{LindbladModel, ModelSpec, ParameterVector};
use crate::operators::{inner, real, CMatrix};
use crate::optimizer::LeastSquares;
use crate::propagator::KrausMap;

/// How the residual Jacobian is assembled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMethod {
    /// Back-propagated observables, one backward sequence per observable.
    Adjoint,
    /// Forward sensitivities, one per parameter.
    Forward,
    /// Whichever of the two has the smaller operation count.
    #[default]
    Auto,
}

/// A model, a dataset and a simulation setting: everything needed to evaluate R(θ).
#[derive(Debug)]
pub struct LearningProblem {
    model: LindbladModel,
    dataset: MeasurementDataset,
    sim: SimSettings,
    record: Vec<usize>,
    method: JacobianMethod,
}

impl LearningProblem {
    pub fn new(spec: ModelSpec, dataset: MeasurementDataset, sim: SimSettings) -> Result<Self> {
        dataset.validate()?;
        if dataset.rho0.dim() != spec.dim() {
            return Err(Error::DimensionMismatch { expected: spec.dim(), found: dataset.rho0.dim() });
        }
        let record = dataset.record_steps(sim.dt)?;
        Ok(LearningProblem { model: LindbladModel::new(spec)?, dataset, sim, record, method: JacobianMethod::Auto })
    }

    /// Method used when the problem is driven through [`LeastSquares`].
    pub fn with_method(mut self, method: JacobianMethod) -> Self {
        self.method = method;
        self
    }

    pub fn method(&self) -> JacobianMethod {
        self.method
    }

    pub fn spec(&self) -> &ModelSpec {
        self.model.spec()
    }

    pub fn model(&self) -> &LindbladModel {
        &self.model
    }

    pub fn dataset(&self) -> &MeasurementDataset {
        &self.dataset
    }

    pub fn sim(&self) -> SimSettings {
        self.sim
    }

    pub fn n_residuals(&self) -> usize {
        self.dataset.n_observables() * self.dataset.n_times
    }

    pub fn n_params(&self) -> usize {
        self.spec().n_params()
    }

    /// Total number of simulated steps M.
    pub fn n_steps(&self) -> usize {
        *self.record.last().expect("at least one measurement")
    }

    fn params(&self, theta: &[f64]) -> Result<ParameterVector> {
        ParameterVector::new(*self.spec(), theta.to_vec())
    }

    pub fn kraus_map(&self, theta: &[f64]) -> Result<KrausMap> {
        let ops = self.model.operators(&self.params(theta)?)?;
        KrausMap::new(&ops, self.sim.dt, self.sim.scheme)
    }

    /// ρ_0, …, ρ_M.
    fn forward_states(&self, k: &KrausMap) -> Vec<CMatrix> {
        let m = self.n_steps();
        let mut states = Vec::with_capacity(m + 1);
        states.push(self.dataset.rho0.op().clone());
        for i in 0..m {
            let next = k.step_op(&states[i]);
            states.push(next);
        }
        states
    }

    /// Residuals given the simulated state at each measurement index n.
    fn residuals_from<'s>(&self, state_at: impl Fn(usize) -> &'s CMatrix) -> ResidualVector {
        let n_t = self.dataset.n_times;
        let mut r = Vec::with_capacity(self.n_residuals());
        for (kk, a) in self.dataset.observables.iter().enumerate() {
            for n in 0..n_t {
                r.push(a.trace_with(state_at(n)).re - self.dataset.values[[kk, n]]);
            }
        }
        ResidualVector::new(r, self.dataset.n_observables(), n_t).expect("shape by construction")
    }

    /// Simulated expectations y_{k,n}(θ), N_O × N_T.
    pub fn predictions(&self, theta: &[f64]) -> Result<Array2<f64>> {
        let k = self.kraus_map(theta)?;
        crate::propagator::evolve_expectations_at(&k, &self.dataset.rho0, &self.dataset.observables, &self.record)
    }

    pub fn residuals(&self, theta: &[f64]) -> Result<ResidualVector> {
        let k = self.kraus_map(theta)?;
        let mut rho = self.dataset.rho0.op().clone();
        let mut at = Vec::with_capacity(self.record.len());
        let mut m = 0;
        for &s in &self.record {
            while m < s {
                rho = k.step_op(&rho);
                m += 1;
            }
            at.push(rho.clone());
        }
        Ok(self.residuals_from(|n| &at[n]))
    }

    pub fn objective(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.residuals(theta)?.objective())
    }

    fn derivatives(&self, theta: &[f64]) -> Result<Vec<SparseDerivative>> {
        let p = self.params(theta)?;
        let jumps = self.model.jumps(p.dissipative_slice())?;
        (0..self.n_params())
            .into_par_iter()
            .map(|alpha| Ok(SparseDerivative::from(&self.model.derivative_with(&p, &jumps, alpha)?)))
            .collect()
    }

    fn check_map(&self, k: &KrausMap) -> Result<()> {
        if k.renormalizes() {
            return Err(Error::Mismatch("sensitivities require a map without trace renormalization".into()));
        }
        Ok(())
    }

    /// Σ_k c_k A_k as a dense operator.
    fn combine(&self, coeffs: impl Iterator<Item = f64>) -> CMatrix {
        let d = self.spec().dim();
        let mut out = CMatrix::zeros((d, d));
        for (a, c) in self.dataset.observables.iter().zip(coeffs) {
            if c != 0.0 {
                out.scaled_add(real(c), a.op());
            }
        }
        out
    }

    /// ∇φ by one combined backward pass of Λ_m = K*Λ_{m+1} + Σ_k r_{k,n} A_k [m = m_n].
    pub fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(self.gradient_with_residuals(theta)?.1)
    }

    pub fn gradient_with_residuals(&self, theta: &[f64]) -> Result<(ResidualVector, Vec<f64>)> {
        let k = self.kraus_map(theta)?;
        self.check_map(&k)?;
        let states = self.forward_states(&k);
        let res = self.residuals_from(|n| &states[self.record[n]]);
        let pds = self.derivatives(theta)?;
        let m_total = self.n_steps();
        let n_o = self.dataset.n_observables();
        let record_at: std::collections::HashMap<usize, usize> =
            self.record.iter().enumerate().map(|(n, &s)| (s, n)).collect();
        let d = self.spec().dim();
        let mut cot = Cotangent::zeros(d, k.n_jumps());
        let mut lambda = self.combine((0..n_o).map(|kk| res.get(kk, record_at[&m_total])));
        for m in (0..m_total).rev() {
            let left = Left::new(&k, lambda);
            let right = Right::new(&k, &states[m], &states[m + 1]);
            accumulate(&k, &left, &right, 1.0, &mut cot);
            let mut next = left.adjoint_step(&k);
            let lhs = inner(&next, &states[m]);
            let rhs = inner(left.op(), &states[m + 1]);
            let scale = crate::operators::frobenius_norm(left.op()) * crate::operators::frobenius_norm(&states[m + 1]);
            if (lhs - rhs).abs() > 1e-10 * scale.max(1e-300) * (d as f64) {
                return Err(Error::Mismatch(format!("adjoint identity violated at step {m}: {lhs} vs {rhs}")));
            }
            if let Some(&n) = record_at.get(&m) {
                next += &self.combine((0..n_o).map(|kk| res.get(kk, n)));
            }
            lambda = next;
        }
        let scale = 1.0 / self.n_residuals() as f64;
        let grad = pds.par_iter().map(|pd| scale * cot.contract(pd)).collect();
        Ok((res, grad))
    }

    /// Operation-count estimate (in dense-product units) for each Jacobian method.
    pub fn jacobian_costs(&self) -> (f64, f64) {
        let nv = self.spec().n_jumps() as f64;
        let n_o = self.dataset.n_observables() as f64;
        let pairs: f64 = self.record.iter().map(|&s| s as f64).sum();
        let adjoint = n_o * pairs * (2.0 * nv + 2.0);
        let forward = self.n_params() as f64 * self.n_steps() as f64 * 7.0;
        (adjoint, forward)
    }

    pub fn resolve_method(&self, method: JacobianMethod) -> JacobianMethod {
        match method {
            JacobianMethod::Auto => {
                let (a, f) = self.jacobian_costs();
                if a < f {
                    JacobianMethod::Adjoint
                } else {
                    JacobianMethod::Forward
                }
            }
            m => m,
        }
    }

    /// Residuals and R' (rows k-major over (k, n), columns over parameters).
    pub fn jacobian(&self, theta: &[f64], method: JacobianMethod) -> Result<(ResidualVector, Array2<f64>)> {
        let k = self.kraus_map(theta)?;
        self.check_map(&k)?;
        let states = self.forward_states(&k);
        let res = self.residuals_from(|n| &states[self.record[n]]);
        let pds = self.derivatives(theta)?;
        let jac = match self.resolve_method(method) {
            JacobianMethod::Adjoint => self.jacobian_adjoint(&k, &states, &pds),
            _ => self.jacobian_forward(&k, &states, &pds),
        };
        Ok((res, jac))
    }

    fn jacobian_adjoint(&self, k: &KrausMap, states: &[CMatrix], pds: &[SparseDerivative]) -> Array2<f64> {
        let m_total = self.n_steps();
        let n_t = self.dataset.n_times;
        let d = self.spec().dim();
        let rights: Vec<Right> =
            (0..m_total).into_par_iter().map(|m| Right::new(k, &states[m], &states[m + 1])).collect();
        let rows: Vec<Vec<Vec<f64>>> = self
            .dataset
            .observables
            .par_iter()
            .map(|a| {
                let mut lefts = Vec::with_capacity(m_total);
                let mut cur = a.op().clone();
                for p in 0..m_total {
                    let left = Left::new(k, cur);
                    if p + 1 < m_total {
                        cur = left.adjoint_step(k);
                    } else {
                        cur = CMatrix::zeros((d, d));
                    }
                    lefts.push(left);
                }
                self.record
                    .iter()
                    .map(|&s| {
                        let mut cot = Cotangent::zeros(d, k.n_jumps());
                        for m in 0..s {
                            accumulate(k, &lefts[s - 1 - m], &rights[m], 1.0, &mut cot);
                        }
                        pds.iter().map(|pd| cot.contract(pd)).collect()
                    })
                    .collect()
            })
            .collect();
        let mut jac = Array2::zeros((self.n_residuals(), self.n_params()));
        for (kk, per_n) in rows.iter().enumerate() {
            for (n, row) in per_n.iter().enumerate() {
                for (alpha, v) in row.iter().enumerate() {
                    jac[[kk * n_t + n, alpha]] = *v;
                }
            }
        }
        jac
    }

    fn jacobian_forward(&self, k: &KrausMap, states: &[CMatrix], pds: &[SparseDerivative]) -> Array2<f64> {
        let m_total = self.n_steps();
        let n_t = self.dataset.n_times;
        let d = self.spec().dim();
        let mut jac = Array2::zeros((self.n_residuals(), self.n_params()));
        let mut chis = vec![CMatrix::zeros((d, d)); pds.len()];
        let mut next_record = self.record.iter().take_while(|&&s| s == 0).count();
        for m in 0..m_total {
            let f = StepFactors::new(k, &states[m], &states[m + 1]);
            chis.par_iter_mut().zip(pds.par_iter()).for_each(|(chi, pd)| {
                *chi = sensitivity_step(k, &f, pd, chi);
            });
            if self.record.get(next_record) == Some(&(m + 1)) {
                let n = next_record;
                for (kk, a) in self.dataset.observables.iter().enumerate() {
                    for (alpha, chi) in chis.iter().enumerate() {
                        jac[[kk * n_t + n, alpha]] = a.trace_with(chi).re;
                    }
                }
                next_record += 1;
            }
        }
        jac
    }
}

pub fn residuals(theta: &ParameterVector, dataset: &MeasurementDataset, sim: SimSettings) -> Result<ResidualVector> {
    LearningProblem::new(*theta.spec(), dataset.clone(), sim)?.residuals(theta.values())
}

pub fn objective(theta: &ParameterVector, dataset: &MeasurementDataset, sim: SimSettings) -> Result<f64> {
    Ok(residuals(theta, dataset, sim)?.objective())
}

pub fn gradient_backprop(theta: &ParameterVector, dataset: &MeasurementDataset, sim: SimSettings) -> Result<Vec<f64>> {
    LearningProblem::new(*theta.spec(), dataset.clone(), sim)?.gradient(theta.values())
}

pub fn jacobian(theta: &ParameterVector, dataset: &MeasurementDataset, sim: SimSettings) -> Result<Array2<f64>> {
    Ok(LearningProblem::new(*theta.spec(), dataset.clone(), sim)?.jacobian(theta.values(), JacobianMethod::Auto)?.1)
}

impl LeastSquares for LearningProblem {
    fn residuals(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(LearningProblem::residuals(self, theta)?.into_values())
    }

    fn residuals_and_jacobian(&self, theta: &[f64]) -> Result<(Vec<f64>, Array2<f64>)> {
        let (r, j) = self.jacobian(theta, self.method)?;
        Ok((r.into_values(), j))
    }
}
