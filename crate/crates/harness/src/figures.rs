//! Canned configurations for the six reference experiments on a six-spin chain.

use std::path::Path;

use clap::ValueEnum;
use oqlearn_core::learning::JacobianMethod;
use oqlearn_core::model::{LindbladModel, ModelSpec};
use oqlearn_core::operators::{pauli_string, BasisKind, DensityMatrix, PauliAxis};
use oqlearn_core::optimizer::LmOptions;
use oqlearn_core::propagator::{KrausMap, Scheme};

use crate::config::{DataConfig, ExperimentConfig, FitConfig, InitialGuess, NoiseModel, CONFIG_SCHEMA_VERSION};
use crate::data::true_parameters;
use crate::error::{HarnessError, Result};
use crate::experiment::{run_to_dir, ExperimentOutcome};
use crate::simulate::trajectory_csv;

pub const N_SPINS: usize = 6;
pub const DEFAULT_SEED: u64 = 1;
pub const LINEAR_DISTANCE: f64 = 0.3658;
pub const PAULI_DISTANCE: f64 = 0.4529;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    /// Integrator accuracy: σ²ʸ from both orders against a fine reference, t ∈ [0, 10].
    Fig1,
    /// Linear dissipator, one- and two-local observables.
    Fig2,
    /// Linear dissipator, one-local observables every 0.01 up to t = 1.
    Fig3,
    /// Linear dissipator, observation window t = 4.1..5.0.
    Fig4,
    /// Pauli-expanded jumps, one- and two-local observables.
    Fig5,
    /// Pauli-expanded jumps, σˣ and σʸ only.
    Fig6,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
        }
    }
}

/// Δt = 0.1, N_T = 10, dt = 0.01 for data and fit, exact data.
pub fn base_config(model: ModelSpec, observables: BasisKind, distance: f64, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: CONFIG_SCHEMA_VERSION,
        model,
        seed,
        true_model_seed: None,
        data: DataConfig {
            dt: 0.01,
            scheme: Scheme::Second,
            delta_t: 0.1,
            n_times: 10,
            t_offset: 0.0,
            observables,
            n_shots: 0,
            noise: NoiseModel::Bernoulli,
            noise_seed: None,
        },
        fit: FitConfig { dt: 0.01, scheme: Scheme::Second, jacobian: JacobianMethod::Auto },
        initial_guess: InitialGuess { distance, seed: None },
        lm: LmOptions::default(),
        sse: None,
    }
}

/// Named experiment configurations for a figure; empty for the pure simulation figure.
pub fn figure_configs(fig: Figure, seed: u64) -> Vec<(&'static str, ExperimentConfig)> {
    let linear = ModelSpec::linear_dissipator(N_SPINS);
    let pauli = ModelSpec::pauli_jump(N_SPINS);
    match fig {
        Figure::Fig1 => vec![],
        Figure::Fig2 => vec![
            ("one_local", base_config(linear, BasisKind::OneLocal, LINEAR_DISTANCE, seed)),
            ("two_local", base_config(linear, BasisKind::TwoLocal, LINEAR_DISTANCE, seed)),
        ],
        Figure::Fig3 => {
            let mut c = base_config(linear, BasisKind::OneLocal, LINEAR_DISTANCE, seed);
            c.data.delta_t = 0.01;
            c.data.n_times = 100;
            vec![("one_local_dense", c)]
        }
        Figure::Fig4 => {
            let mut c = base_config(linear, BasisKind::OneLocal, LINEAR_DISTANCE, seed);
            c.data.t_offset = 4.0;
            vec![("one_local_late", c)]
        }
        Figure::Fig5 => vec![
            ("one_local", base_config(pauli, BasisKind::OneLocal, PAULI_DISTANCE, seed)),
            ("two_local", base_config(pauli, BasisKind::TwoLocal, PAULI_DISTANCE, seed)),
        ],
        Figure::Fig6 => vec![("xy_one_local", base_config(pauli, BasisKind::XyOneLocal, PAULI_DISTANCE, seed))],
    }
}

/// Writes `reference.csv` (order 2, dt = 1e-4), `first.csv` and `second.csv` (dt = 1e-2).
pub fn reproduce_fig1(out: &Path, seed: u64) -> Result<()> {
    std::fs::create_dir_all(out).map_err(HarnessError::io(out))?;
    let config = base_config(ModelSpec::linear_dissipator(N_SPINS), BasisKind::OneLocal, 0.0, seed);
    let ops = LindbladModel::new(config.model)?.operators(&true_parameters(&config))?;
    let y2 = pauli_string(&[1], &[PauliAxis::Y], N_SPINS)?;
    let rho0 = DensityMatrix::all_up(N_SPINS);
    let t_final = 10.0;
    let record = 0.1;
    for (name, scheme, dt) in
        [("reference", Scheme::Second, 1e-4), ("first", Scheme::First, 1e-2), ("second", Scheme::Second, 1e-2)]
    {
        let k = KrausMap::new(&ops, dt, scheme)?;
        let steps = (t_final / dt).round() as usize;
        let stride = (record / dt).round() as usize;
        let csv = trajectory_csv(&k, &rho0, std::slice::from_ref(&y2), steps, stride)?;
        let path = out.join(format!("{name}.csv"));
        std::fs::write(&path, csv).map_err(HarnessError::io(&path))?;
    }
    std::fs::write(out.join("config.json"), config.to_json()).map_err(HarnessError::io(out.join("config.json")))
}

/// Runs every configuration of `fig` into `out/<variant>/`.
pub fn reproduce(fig: Figure, out: &Path, seed: u64) -> Result<Vec<(&'static str, ExperimentOutcome)>> {
    if fig == Figure::Fig1 {
        reproduce_fig1(out, seed)?;
        return Ok(vec![]);
    }
    figure_configs(fig, seed)
        .into_iter()
        .map(|(name, config)| Ok((name, run_to_dir(&config, None, &out.join(name))?)))
        .collect()
}
