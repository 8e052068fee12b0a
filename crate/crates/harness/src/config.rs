//! Experiment configuration: one JSON document with a mandatory `schema_version`.

use std::path::Path;

use oqlearn_core::learning::{step_ratio, JacobianMethod, SimSettings};
use oqlearn_core::model::ModelSpec;
use oqlearn_core::operators::BasisKind;
use oqlearn_core::optimizer::LmOptions;
use oqlearn_core::propagator::Scheme;
use oqlearn_core::unraveling::SseScheme;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Shot-noise model applied to exact expectations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// Mean of N_S outcomes ±1 with P(+1) = (1 + ⟨A⟩)/2.
    #[default]
    Bernoulli,
    /// ⟨A⟩ plus N(0, (1 − ⟨A⟩²)/N_S).
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Integrator step for the ground-truth expectations.
    pub dt: f64,
    #[serde(default)]
    pub scheme: Scheme,
    pub delta_t: f64,
    pub n_times: usize,
    /// Measurements happen at t_offset + nΔt, n = 1..=n_times.
    #[serde(default)]
    pub t_offset: f64,
    pub observables: BasisKind,
    /// Shots per expectation; 0 keeps exact values.
    #[serde(default)]
    pub n_shots: u64,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub noise_seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub dt: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub jacobian: JacobianMethod,
}

impl FitConfig {
    pub fn sim(&self) -> SimSettings {
        SimSettings { scheme: self.scheme, dt: self.dt }
    }
}

/// θ₀ = θ* + distance · u with u a seeded Gaussian direction of unit length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialGuess {
    pub distance: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SseConfig {
    pub dt: f64,
    pub steps: usize,
    pub n_traj: usize,
    #[serde(default = "default_sse_scheme")]
    pub scheme: SseScheme,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_sse_scheme() -> SseScheme {
    SseScheme::Second
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelSpec,
    /// Master seed; every unset sub-seed is derived from it.
    pub seed: u64,
    #[serde(default)]
    pub true_model_seed: Option<u64>,
    pub data: DataConfig,
    pub fit: FitConfig,
    pub initial_guess: InitialGuess,
    #[serde(default)]
    pub lm: LmOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sse: Option<SseConfig>,
}

/// Seeds actually used by a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub master: u64,
    pub true_model: u64,
    pub noise: u64,
    pub initial_guess: u64,
    pub sse: u64,
}

/// SplitMix64 finalizer applied to the master seed offset by a per-purpose stream index.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            None => return Err(HarnessError::Config("missing schema_version".into())),
            Some(v) if v != u64::from(CONFIG_SCHEMA_VERSION) => {
                return Err(HarnessError::SchemaVersion { found: v as u32, expected: CONFIG_SCHEMA_VERSION })
            }
            Some(_) => {}
        }
        let config: ExperimentConfig =
            serde_json::from_value(value).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn seeds(&self) -> Seeds {
        let m = self.seed;
        Seeds {
            master: m,
            true_model: self.true_model_seed.unwrap_or_else(|| derive_seed(m, 1)),
            noise: self.data.noise_seed.unwrap_or_else(|| derive_seed(m, 2)),
            initial_guess: self.initial_guess.seed.unwrap_or_else(|| derive_seed(m, 3)),
            sse: self.sse.as_ref().and_then(|s| s.seed).unwrap_or_else(|| derive_seed(m, 4)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(HarnessError::SchemaVersion { found: self.schema_version, expected: CONFIG_SCHEMA_VERSION });
        }
        ModelSpec::new(self.model.family, self.model.n_qubits, self.model.mode)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let d = &self.data;
        if d.n_times == 0 {
            return bad("data.n_times must be at least 1".into());
        }
        if !(d.t_offset >= 0.0) {
            return bad("data.t_offset must be non-negative".into());
        }
        for (what, dt) in [("data.dt", d.dt), ("fit.dt", self.fit.dt)] {
            if step_ratio(d.delta_t, dt).is_err() {
                return bad(format!("data.delta_t = {} is not a positive multiple of {what} = {dt}", d.delta_t));
            }
            if d.t_offset > 0.0 && step_ratio(d.t_offset, dt).is_err() {
                return bad(format!("data.t_offset = {} is not a multiple of {what} = {dt}", d.t_offset));
            }
        }
        if !(self.initial_guess.distance >= 0.0 && self.initial_guess.distance.is_finite()) {
            return bad("initial_guess.distance must be a non-negative number".into());
        }
        self.lm.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if let Some(s) = &self.sse {
            if !(s.dt > 0.0) || s.n_traj < 2 {
                return bad("sse needs dt > 0 and at least two trajectories".into());
            }
        }
        Ok(())
    }
}
