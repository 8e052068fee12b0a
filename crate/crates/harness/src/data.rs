//! Synthetic measurement data and its on-disk form.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use oqlearn_core::learning::{LearningProblem, MeasurementDataset, SimSettings};
use oqlearn_core::model::{random_true_model, ParameterVector, LAYOUT_SCHEMA_VERSION};
use oqlearn_core::operators::{observable_basis, pauli_string, DensityMatrix, Observable, PauliAxis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, NoiseModel, Seeds};
use crate::error::{HarnessError, Result};

pub const DATASET_FORMAT: &str = "oqlearn-dataset";
pub const DATASET_SCHEMA_VERSION: u32 = 1;

/// Slack allowed on |⟨A⟩| / tr ρ ≤ 1 before the integrator output is rejected.
const RANGE_SLACK: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct GeneratedData {
    pub truth: ParameterVector,
    /// Noise-free expectations on the same grid.
    pub exact: Array2<f64>,
    pub dataset: MeasurementDataset,
}

fn empty_dataset(config: &ExperimentConfig, observables: Vec<Observable>, seed: Option<u64>) -> MeasurementDataset {
    let d = &config.data;
    MeasurementDataset {
        values: Array2::zeros((observables.len(), d.n_times)),
        observables,
        delta_t: d.delta_t,
        n_times: d.n_times,
        t_offset: d.t_offset,
        n_shots: d.n_shots,
        rho0: DensityMatrix::all_up(config.model.n_qubits),
        seed,
    }
}

pub fn true_parameters(config: &ExperimentConfig) -> ParameterVector {
    random_true_model(config.seeds().true_model, &config.model)
}

/// Expectations of the configured observables under `theta`, simulated at the data step.
pub fn exact_expectations(config: &ExperimentConfig, theta: &ParameterVector) -> Result<Array2<f64>> {
    let observables = observable_basis(config.data.observables, config.model.n_qubits)?;
    let template = empty_dataset(config, observables, None);
    let sim = SimSettings { scheme: config.data.scheme, dt: config.data.dt };
    Ok(LearningProblem::new(config.model, template, sim)?.predictions(theta.values())?)
}

/// Rejects expectations whose trace-normalized value leaves [-1, 1] by more than 1e-8.
/// `trace` holds tr ρ at each measurement time; the integrators preserve it only to O(dt^p).
pub fn check_range(exact: &Array2<f64>, observables: &[Observable], trace: &[f64]) -> Result<()> {
    for (k, a) in observables.iter().enumerate() {
        for (&y, &tr) in exact.row(k).iter().zip(trace) {
            if !y.is_finite() || y.abs() > tr * (1.0 + RANGE_SLACK) {
                return Err(HarnessError::ExpectationOutOfRange { label: a.label().to_string(), value: y / tr });
            }
        }
    }
    Ok(())
}

fn trace_series(config: &ExperimentConfig, theta: &ParameterVector) -> Result<Vec<f64>> {
    let template = empty_dataset(config, vec![pauli_string(&[], &[], config.model.n_qubits)?], None);
    let sim = SimSettings { scheme: config.data.scheme, dt: config.data.dt };
    Ok(LearningProblem::new(config.model, template, sim)?.predictions(theta.values())?.row(0).to_vec())
}

/// Replaces each Pauli expectation by a finite-shot estimate; identity rows stay exact.
pub fn apply_shot_noise(
    exact: &Array2<f64>,
    observables: &[Observable],
    n_shots: u64,
    noise: NoiseModel,
    seed: u64,
) -> Array2<f64> {
    let mut out = exact.clone();
    if n_shots == 0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_shots as f64;
    for (k, a) in observables.iter().enumerate() {
        if a.label() == "I" {
            continue;
        }
        for v in out.row_mut(k).iter_mut() {
            let y = v.clamp(-1.0, 1.0);
            *v = match noise {
                NoiseModel::Bernoulli => {
                    let p = 0.5 * (1.0 + y);
                    let ups = Binomial::new(n_shots, p).expect("p lies in [0, 1]").sample(&mut rng) as f64;
                    (2.0 * ups - n) / n
                }
                NoiseModel::Gaussian => {
                    let sd = ((1.0 - y * y).max(0.0) / n).sqrt();
                    y + Normal::new(0.0, sd).expect("finite deviation").sample(&mut rng)
                }
            };
        }
    }
    out
}

pub fn generate_data(config: &ExperimentConfig) -> Result<GeneratedData> {
    config.validate()?;
    let seeds = config.seeds();
    let truth = true_parameters(config);
    let exact = exact_expectations(config, &truth)?;
    let observables = observable_basis(config.data.observables, config.model.n_qubits)?;
    check_range(&exact, &observables, &trace_series(config, &truth)?)?;
    let values = apply_shot_noise(&exact, &observables, config.data.n_shots, config.data.noise, seeds.noise);
    let noise_seed = (config.data.n_shots > 0).then_some(seeds.noise);
    let mut dataset = empty_dataset(config, observables, noise_seed);
    dataset.values = values;
    Ok(GeneratedData { truth, exact, dataset })
}

/// 15 significant digits, for plot-ready output.
pub fn format_value(v: f64) -> String {
    format!("{v:.14e}")
}

/// Shortest form that parses back to the same f64.
pub fn format_exact(v: f64) -> String {
    format!("{v:e}")
}

/// First line of a dataset file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub schema_version: u32,
    pub layout_schema_version: u32,
    pub n_qubits: usize,
    pub observables: Vec<String>,
    pub delta_t: f64,
    pub n_times: usize,
    pub t_offset: f64,
    pub n_shots: u64,
    pub initial_state: String,
    pub seeds: Seeds,
    pub config: ExperimentConfig,
}

pub fn dataset_header(config: &ExperimentConfig, dataset: &MeasurementDataset) -> DatasetHeader {
    DatasetHeader {
        format: DATASET_FORMAT.into(),
        schema_version: DATASET_SCHEMA_VERSION,
        layout_schema_version: LAYOUT_SCHEMA_VERSION,
        n_qubits: config.model.n_qubits,
        observables: dataset.observables.iter().map(|a| a.label().to_string()).collect(),
        delta_t: dataset.delta_t,
        n_times: dataset.n_times,
        t_offset: dataset.t_offset,
        n_shots: dataset.n_shots,
        initial_state: "all_up".into(),
        seeds: config.seeds(),
        config: config.clone(),
    }
}

/// JSON header line followed by CSV rows `k,n,t,value` (k 0-based, n 1-based).
pub fn render_dataset(config: &ExperimentConfig, dataset: &MeasurementDataset) -> Result<String> {
    let mut out = serde_json::to_string(&dataset_header(config, dataset))?;
    out.push('\n');
    out.push_str("k,n,t,value\n");
    let times = dataset.times();
    for k in 0..dataset.n_observables() {
        for (n, t) in times.iter().enumerate() {
            writeln!(out, "{k},{},{},{}", n + 1, format_exact(*t), format_exact(dataset.values[[k, n]]))
                .expect("writing to a string");
        }
    }
    Ok(out)
}

pub fn write_dataset(path: &Path, config: &ExperimentConfig, dataset: &MeasurementDataset) -> Result<()> {
    std::fs::write(path, render_dataset(config, dataset)?).map_err(HarnessError::io(path))
}

/// Parses labels such as `I`, `y2` or `x1z3` (1-based sites).
pub fn parse_pauli_label(label: &str, n_qubits: usize) -> Result<Observable> {
    if label == "I" {
        return Ok(pauli_string(&[], &[], n_qubits)?);
    }
    let bad = || HarnessError::Dataset(format!("unrecognized observable label {label:?}"));
    if label.is_empty() {
        return Err(bad());
    }
    let mut sites = Vec::new();
    let mut axes = Vec::new();
    let mut chars = label.chars().peekable();
    while let Some(c) = chars.next() {
        let axis = match c {
            'x' => PauliAxis::X,
            'y' => PauliAxis::Y,
            'z' => PauliAxis::Z,
            _ => return Err(bad()),
        };
        let mut digits = String::new();
        while let Some(d) = chars.peek().copied().filter(char::is_ascii_digit) {
            digits.push(d);
            chars.next();
        }
        let site: usize = digits.parse().map_err(|_| bad())?;
        if site == 0 {
            return Err(bad());
        }
        sites.push(site - 1);
        axes.push(axis);
    }
    Ok(pauli_string(&sites, &axes, n_qubits)?)
}

#[derive(Debug, Deserialize)]
struct Row {
    k: usize,
    n: usize,
    #[allow(dead_code)]
    t: f64,
    value: f64,
}

pub fn parse_dataset(text: &str) -> Result<(DatasetHeader, MeasurementDataset)> {
    let (first, body) = text.split_once('\n').ok_or_else(|| HarnessError::Dataset("missing header line".into()))?;
    let header: DatasetHeader = serde_json::from_str(first)?;
    if header.format != DATASET_FORMAT || header.schema_version != DATASET_SCHEMA_VERSION {
        return Err(HarnessError::Dataset(format!(
            "expected {DATASET_FORMAT} version {DATASET_SCHEMA_VERSION}, found {} version {}",
            header.format, header.schema_version
        )));
    }
    if header.initial_state != "all_up" {
        return Err(HarnessError::Dataset(format!("unknown initial state {:?}", header.initial_state)));
    }
    let observables =
        header.observables.iter().map(|l| parse_pauli_label(l, header.n_qubits)).collect::<Result<Vec<_>>>()?;
    let mut values = Array2::from_elem((observables.len(), header.n_times), f64::NAN);
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    for row in reader.deserialize() {
        let row: Row = row?;
        if row.k >= observables.len() || row.n == 0 || row.n > header.n_times {
            return Err(HarnessError::Dataset(format!("row index ({}, {}) out of range", row.k, row.n)));
        }
        values[[row.k, row.n - 1]] = row.value;
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(HarnessError::Dataset("missing values".into()));
    }
    let dataset = MeasurementDataset {
        observables,
        delta_t: header.delta_t,
        n_times: header.n_times,
        t_offset: header.t_offset,
        values,
        n_shots: header.n_shots,
        rho0: DensityMatrix::all_up(header.n_qubits),
        seed: (header.n_shots > 0).then_some(header.seeds.noise),
    };
    dataset.validate()?;
    Ok((header, dataset))
}

pub fn read_dataset(path: &Path) -> Result<(DatasetHeader, MeasurementDataset)> {
    let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
    parse_dataset(&text)
}
