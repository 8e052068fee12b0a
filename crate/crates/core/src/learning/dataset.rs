use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{DensityMatrix, Observable};
use crate::propagator::Scheme;

/// Expectation values y_{k,n} of observables A_k at times t_n = offset + nΔt, n = 1..=N_T.
#[derive(Clone, Debug)]
pub struct MeasurementDataset {
    pub observables: Vec<Observable>,
    pub delta_t: f64,
    pub n_times: usize,
    pub t_offset: f64,
    /// N_O × N_T
    pub values: Array2<f64>,
    /// Shots per value; 0 means exact expectations.
    pub n_shots: u64,
    pub rho0: DensityMatrix,
    pub seed: Option<u64>,
}

impl MeasurementDataset {
    pub fn validate(&self) -> Result<()> {
        let shape = (self.observables.len(), self.n_times);
        if self.values.dim() != shape {
            return Err(Error::InvalidArgument(format!(
                "values have shape {:?}, expected {:?}",
                self.values.dim(),
                shape
            )));
        }
        if !(self.delta_t > 0.0) || self.t_offset < 0.0 || self.n_times == 0 {
            return Err(Error::InvalidArgument("measurement times must be positive and increasing".into()));
        }
        for a in &self.observables {
            if a.dim() != self.rho0.dim() {
                return Err(Error::DimensionMismatch { expected: self.rho0.dim(), found: a.dim() });
            }
        }
        Ok(())
    }

    pub fn n_observables(&self) -> usize {
        self.observables.len()
    }

    pub fn times(&self) -> Vec<f64> {
        (1..=self.n_times).map(|n| self.t_offset + n as f64 * self.delta_t).collect()
    }

    /// Step indices m_n at which the simulation with step `dt` is compared to the data.
    pub fn record_steps(&self, dt: f64) -> Result<Vec<usize>> {
        let l = step_ratio(self.delta_t, dt)?;
        let offset = if self.t_offset == 0.0 { 0 } else { step_ratio(self.t_offset, dt)? };
        Ok((1..=self.n_times).map(|n| offset + n * l).collect())
    }
}

/// interval / dt, required to be a positive integer up to rounding.
pub fn step_ratio(interval: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) {
        return Err(Error::InvalidStep(dt));
    }
    let r = interval / dt;
    let n = r.round();
    if n < 1.0 || (r - n).abs() > 1e-9 * n {
        return Err(Error::NonIntegerRatio { interval, dt });
    }
    Ok(n as usize)
}

/// Integrator and step used to simulate the model being fitted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub scheme: Scheme,
    pub dt: f64,
}

/// Raw residuals r_{k,n} = y_{k,n}(θ) − y*_{k,n}, k-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualVector {
    values: Vec<f64>,
    n_observables: usize,
    n_times: usize,
}

impl ResidualVector {
    pub fn new(values: Vec<f64>, n_observables: usize, n_times: usize) -> Result<Self> {
        if values.len() != n_observables * n_times {
            return Err(Error::DimensionMismatch { expected: n_observables * n_times, found: values.len() });
        }
        Ok(ResidualVector { values, n_observables, n_times })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, k: usize, n: usize) -> f64 {
        self.values[k * self.n_times + n]
    }

    pub fn n_observables(&self) -> usize {
        self.n_observables
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|r| r * r).sum::<f64>().sqrt()
    }

    /// φ = ‖R‖² / (2 N_O N_T).
    pub fn objective(&self) -> f64 {
        let s: f64 = self.values.iter().map(|r| r * r).sum();
        s / (2.0 * (self.n_observables * self.n_times) as f64)
    }
}
