//! One identification run: data, initial guess, Levenberg–Marquardt, artifacts.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use oqlearn_core::learning::{JacobianMethod, LearningProblem, MeasurementDataset};
use oqlearn_core::model::{ParameterVector, LAYOUT_SCHEMA_VERSION};
use oqlearn_core::optimizer::{lm_run, rate_diagnostics, LmHistory, RateReport, Termination};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::config::{ExperimentConfig, Seeds, CONFIG_SCHEMA_VERSION};
use crate::data::{generate_data, write_dataset, DATASET_SCHEMA_VERSION};
use crate::error::{HarnessError, Result};

/// θ* + distance · u, u uniform on the unit sphere.
pub fn initial_guess(truth: &ParameterVector, distance: f64, seed: u64) -> Result<ParameterVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<f64> = loop {
        let u: Vec<f64> = (0..truth.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        if u.iter().any(|x: &f64| *x != 0.0) {
            break u;
        }
    };
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let values = truth.values().iter().zip(&u).map(|(t, x)| t + distance * x / norm).collect();
    Ok(truth.with_values(values)?)
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub truth: ParameterVector,
    pub theta0: ParameterVector,
    pub theta_hat: ParameterVector,
    pub dataset: MeasurementDataset,
    pub history: LmHistory,
    pub method: JacobianMethod,
    pub wall_time_s: f64,
}

impl ExperimentOutcome {
    pub fn final_rel_error(&self) -> f64 {
        self.theta_hat.distance(&self.truth) / self.truth.norm()
    }

    pub fn rate(&self) -> std::result::Result<RateReport, String> {
        rate_diagnostics(&self.history).map_err(|e| e.to_string())
    }

    pub fn summary(&self) -> Summary {
        let (rate, rate_error) = match self.rate() {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e)),
        };
        Summary {
            run: self.config.run_info(),
            n_params: self.truth.len(),
            n_residuals: self.dataset.n_observables() * self.dataset.n_times,
            jacobian_method: Some(self.method),
            initial_distance: Some(self.theta0.distance(&self.truth)),
            final_phi: Some(self.history.last().phi),
            final_rel_error: Some(self.final_rel_error()),
            iterations: Some(self.history.records.len() - 1),
            accepted_iterations: Some(self.history.accepted_iterations()),
            termination: Some(self.history.termination),
            stagnated: Some(self.history.stagnated()),
            rate,
            rate_error,
            theta_true: Some(self.truth.values().to_vec()),
            theta_hat: Some(self.theta_hat.values().to_vec()),
            wall_time_s: self.wall_time_s,
            error: None,
        }
    }
}

/// Everything a run needs to be repeated, echoed into every artifact.
#[derive(Clone, Debug, Serialize)]
pub struct RunInfo {
    pub config_schema_version: u32,
    pub dataset_schema_version: u32,
    pub layout_schema_version: u32,
    pub seeds: Seeds,
    pub dt_data: f64,
    pub dt_sim: f64,
    pub config: ExperimentConfig,
}

impl ExperimentConfig {
    pub fn run_info(&self) -> RunInfo {
        RunInfo {
            config_schema_version: CONFIG_SCHEMA_VERSION,
            dataset_schema_version: DATASET_SCHEMA_VERSION,
            layout_schema_version: LAYOUT_SCHEMA_VERSION,
            seeds: self.seeds(),
            dt_data: self.data.dt,
            dt_sim: self.fit.dt,
            config: self.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    #[serde(flatten)]
    pub run: RunInfo,
    pub n_params: usize,
    pub n_residuals: usize,
    pub jacobian_method: Option<JacobianMethod>,
    pub initial_distance: Option<f64>,
    pub final_phi: Option<f64>,
    pub final_rel_error: Option<f64>,
    pub iterations: Option<usize>,
    pub accepted_iterations: Option<usize>,
    pub termination: Option<Termination>,
    pub stagnated: Option<bool>,
    pub rate: Option<RateReport>,
    pub rate_error: Option<String>,
    pub theta_true: Option<Vec<f64>>,
    pub theta_hat: Option<Vec<f64>>,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

impl Summary {
    pub fn failed(config: &ExperimentConfig, error: &HarnessError, wall_time_s: f64) -> Self {
        Summary {
            run: config.run_info(),
            n_params: config.model.n_params(),
            n_residuals: config.data.observables.count(config.model.n_qubits) * config.data.n_times,
            jacobian_method: None,
            initial_distance: None,
            final_phi: None,
            final_rel_error: None,
            iterations: None,
            accepted_iterations: None,
            termination: None,
            stagnated: None,
            rate: None,
            rate_error: None,
            theta_true: None,
            theta_hat: None,
            wall_time_s,
            error: Some(error.to_string()),
        }
    }
}

/// Fits `dataset` (generated from `truth`) starting from the configured perturbation of `truth`.
pub fn fit_dataset(
    config: &ExperimentConfig,
    truth: ParameterVector,
    dataset: MeasurementDataset,
) -> Result<ExperimentOutcome> {
    let start = Instant::now();
    let theta0 = initial_guess(&truth, config.initial_guess.distance, config.seeds().initial_guess)?;
    let problem =
        LearningProblem::new(config.model, dataset.clone(), config.fit.sim())?.with_method(config.fit.jacobian);
    let method = problem.resolve_method(config.fit.jacobian);
    let outcome = lm_run(&problem, theta0.values(), &config.lm, Some(truth.values()))?;
    let theta_hat = truth.with_values(outcome.theta)?;
    Ok(ExperimentOutcome {
        config: config.clone(),
        truth,
        theta0,
        theta_hat,
        dataset,
        history: outcome.history,
        method,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let data = generate_data(config)?;
    fit_dataset(config, data.truth, data.dataset)
}

fn opt(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite()).map(crate::data::format_exact).unwrap_or_default()
}

/// `iter,phi,res_norm,nu,step_norm,accepted,rel_param_err`; NaN and unknown values are empty.
pub fn history_csv(history: &LmHistory) -> String {
    let mut out = String::from("iter,phi,res_norm,nu,step_norm,accepted,rel_param_err\n");
    for r in &history.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.iter,
            opt(Some(r.phi)),
            opt(Some(r.res_norm)),
            opt(Some(r.nu)),
            opt(Some(r.step_norm)),
            u8::from(r.accepted),
            opt(r.rel_param_err)
        )
        .expect("writing to a string");
    }
    out
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(HarnessError::io(path))
}

pub fn write_summary(dir: &Path, summary: &Summary) -> Result<()> {
    write(&dir.join("summary.json"), &(serde_json::to_string_pretty(summary)? + "\n"))
}

impl ExperimentOutcome {
    /// `dataset.csv`, `history.csv`, `summary.json`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
        write_dataset(&dir.join("dataset.csv"), &self.config, &self.dataset)?;
        write(&dir.join("history.csv"), &history_csv(&self.history))?;
        write_summary(dir, &self.summary())
    }
}

/// Runs and writes artifacts; a failure after the config was accepted still leaves a summary behind.
pub fn run_to_dir(
    config: &ExperimentConfig,
    dataset: Option<(ParameterVector, MeasurementDataset)>,
    dir: &Path,
) -> Result<ExperimentOutcome> {
    let start = Instant::now();
    std::fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    let result = match dataset {
        Some((truth, ds)) => fit_dataset(config, truth, ds),
        None => run_experiment(config),
    };
    match result {
        Ok(outcome) => {
            outcome.write_artifacts(dir)?;
            Ok(outcome)
        }
        Err(e) => {
            write_summary(dir, &Summary::failed(config, &e, start.elapsed().as_secs_f64()))?;
            Err(e)
        }
    }
}
