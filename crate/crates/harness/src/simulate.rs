//! Forward simulation of the true model: expectation trajectories and trajectory-averaged states.

use std::fmt::Write as _;

use oqlearn_core::model::LindbladModel;
use oqlearn_core::operators::{expectation, observable_basis, CVector, DensityMatrix, Observable, ONE};
use oqlearn_core::propagator::{evolve_trajectory, KrausMap, Scheme};
use oqlearn_core::unraveling::mc_density;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::data::{format_value, true_parameters};
use crate::error::{HarnessError, Result};

/// `t,observable,value` rows at every `stride`-th step up to `steps`.
pub fn trajectory_csv(
    k: &KrausMap,
    rho0: &DensityMatrix,
    observables: &[Observable],
    steps: usize,
    stride: usize,
) -> Result<String> {
    let traj = evolve_trajectory(k, rho0, steps, stride)?;
    let mut out = String::from("t,observable,value\n");
    for (t, state) in traj.times.iter().zip(&traj.states) {
        for a in observables {
            writeln!(out, "{},{},{}", format_value(*t), a.label(), format_value(expectation(a, state)?))
                .expect("writing to a string");
        }
    }
    Ok(out)
}

/// Expectations of the configured observables from t = 0 to the last measurement time, sampled
/// every Δt, using the data step and scheme.
pub fn simulate(config: &ExperimentConfig) -> Result<String> {
    config.validate()?;
    let d = &config.data;
    let ops = LindbladModel::new(config.model)?.operators(&true_parameters(config))?;
    let k = KrausMap::new(&ops, d.dt, d.scheme)?;
    let stride = oqlearn_core::learning::step_ratio(d.delta_t, d.dt)?;
    let offset = if d.t_offset > 0.0 { oqlearn_core::learning::step_ratio(d.t_offset, d.dt)? } else { 0 };
    if offset % stride != 0 {
        return Err(HarnessError::Config("data.t_offset must be a multiple of data.delta_t to simulate".into()));
    }
    let observables = observable_basis(d.observables, config.model.n_qubits)?;
    trajectory_csv(&k, &DensityMatrix::all_up(config.model.n_qubits), &observables, offset + d.n_times * stride, stride)
}

#[derive(Clone, Debug, Serialize)]
pub struct ObservableEstimate {
    pub label: String,
    pub trajectory_mean: f64,
    /// Same expectation under the order-2 Kraus map with the trajectory step.
    pub kraus: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SseReport {
    pub n_qubits: usize,
    pub dt: f64,
    pub steps: usize,
    pub t_final: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub rho_re: Vec<Vec<f64>>,
    pub rho_im: Vec<Vec<f64>>,
    pub std_err_re: Vec<Vec<f64>>,
    pub std_err_im: Vec<Vec<f64>>,
    pub observables: Vec<ObservableEstimate>,
    pub config: ExperimentConfig,
}

fn rows(m: impl Fn(usize, usize) -> f64, d: usize) -> Vec<Vec<f64>> {
    (0..d).map(|i| (0..d).map(|j| m(i, j)).collect()).collect()
}

/// Averages trajectories of the true model started from |0…0⟩.
pub fn run_sse(config: &ExperimentConfig) -> Result<SseReport> {
    config.validate()?;
    let sse = config.sse.as_ref().ok_or_else(|| HarnessError::Config("the sse section is required".into()))?;
    let n = config.model.n_qubits;
    let ops = LindbladModel::new(config.model)?.operators(&true_parameters(config))?;
    let seed = config.seeds().sse;
    let mut psi0 = CVector::zeros(1 << n);
    psi0[0] = ONE;
    let est = mc_density(&psi0, &ops, sse.dt, sse.steps, sse.n_traj, sse.scheme, seed)?;
    let k = KrausMap::new(&ops, sse.dt, Scheme::Second)?;
    let mut rho = DensityMatrix::all_up(n);
    for _ in 0..sse.steps {
        rho = k.apply(&rho)?;
    }
    let observables = observable_basis(config.data.observables, n)?
        .into_iter()
        .map(|a| {
            Ok(ObservableEstimate {
                label: a.label().to_string(),
                trajectory_mean: a.trace_with(&est.rho).re,
                kraus: expectation(&a, &rho)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let d = 1 << n;
    Ok(SseReport {
        n_qubits: n,
        dt: sse.dt,
        steps: sse.steps,
        t_final: sse.dt * sse.steps as f64,
        n_traj: sse.n_traj,
        seed,
        rho_re: rows(|i, j| est.rho[[i, j]].re, d),
        rho_im: rows(|i, j| est.rho[[i, j]].im, d),
        std_err_re: rows(|i, j| est.std_err_re[[i, j]], d),
        std_err_im: rows(|i, j| est.std_err_im[[i, j]], d),
        observables,
        config: config.clone(),
    })
}
