//! Experiment config files.
//!
//! ```toml
//! model = "two_state.toml"   # relative to this file
//! seed = 7
//! out = "out/converge"
//!
//! [converge]
//! deltas = [0.0625, 0.03125, 0.015625]
//! delta_ref = 0.0001220703125
//! paths = 1000
//! x0 = [0.5]
//! ```

use std::path::{Path, PathBuf};

use rsdp::couple::MeetRule;
use rsdp::model::config::ModelConfig;
use rsdp::model::GridSpec;
use rsdp::RsdpModel;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Grid for sampled assumption checks and rate bounds.
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub converge: Option<ConvergeParams>,
    #[serde(default)]
    pub dominate: Option<DominateParams>,
    #[serde(default)]
    pub couple: Option<CoupleParams>,
    #[serde(default)]
    pub invariant: Option<InvariantParams>,
    #[serde(default)]
    pub simulate: Option<SimulateParams>,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeParams {
    pub deltas: Vec<f64>,
    pub delta_ref: f64,
    #[serde(default = "unit")]
    pub horizon: f64,
    pub paths: usize,
    pub x0: Vec<f64>,
    #[serde(default = "one")]
    pub i0: usize,
    #[serde(default = "default_slope")]
    pub slope_threshold: f64,
}

fn default_slope() -> f64 {
    0.45
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominateParams {
    pub delta: f64,
    #[serde(default = "default_dominate_paths")]
    pub paths: usize,
    pub x0: Vec<f64>,
    #[serde(default = "one")]
    pub i0: usize,
    /// Regime weights; the model's `alpha` when omitted.
    #[serde(default)]
    pub lambda: Option<Vec<f64>>,
    #[serde(default = "default_fk_times")]
    pub times: Vec<f64>,
    /// Paths for the `Λ̄` Monte Carlo; `paths` when omitted.
    #[serde(default)]
    pub chain_paths: Option<usize>,
    /// Standard errors allowed between the chain estimate and the oracle.
    #[serde(default = "default_z")]
    pub max_z: f64,
}

fn default_dominate_paths() -> usize {
    10_000
}

fn default_fk_times() -> Vec<f64> {
    vec![1.0, 2.0, 5.0]
}

fn default_z() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoupleParams {
    pub x: Vec<f64>,
    #[serde(default = "one")]
    pub i: usize,
    pub y: Vec<f64>,
    #[serde(default = "one")]
    pub j: usize,
    #[serde(default = "default_couple_delta")]
    pub delta: f64,
    #[serde(default = "default_tmax")]
    pub horizon: f64,
    #[serde(default = "default_couple_paths")]
    pub paths: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "one")]
    pub designated: usize,
    #[serde(default = "default_rule")]
    pub rule: MeetRule,
    #[serde(default = "default_min_coupled")]
    pub min_coupled_fraction: f64,
    /// Regime frozen in the fixed-environment runs; the A4 regime when omitted.
    #[serde(default)]
    pub env: Option<usize>,
    #[serde(default)]
    pub fixed_env: Option<FixedEnvParams>,
    #[serde(default)]
    pub tail: Option<TailParams>,
    #[serde(default)]
    pub contraction: Option<ContractionParams>,
    #[serde(default)]
    pub moments: Option<MomentParams>,
}

fn default_couple_delta() -> f64 {
    0.01
}

fn default_tmax() -> f64 {
    50.0
}

fn default_couple_paths() -> usize {
    2000
}

fn default_epsilon() -> f64 {
    rsdp::couple::DEFAULT_EPSILON
}

fn default_rule() -> MeetRule {
    MeetRule::AnyRegime
}

fn default_min_coupled() -> f64 {
    0.99
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedEnvParams {
    /// Distances `|x − y|`; pairs are `±r/2 · e₁`.
    pub distances: Vec<f64>,
    #[serde(default = "default_fixed_delta")]
    pub delta: f64,
    #[serde(default = "default_tmax")]
    pub horizon: f64,
    #[serde(default = "default_couple_paths")]
    pub paths: usize,
    #[serde(default = "default_bound_tol")]
    pub tolerance: f64,
}

fn default_fixed_delta() -> f64 {
    1e-3
}

fn default_bound_tol() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailParams {
    pub times: Vec<f64>,
    #[serde(default = "default_tail_tol")]
    pub tolerance: f64,
}

fn default_tail_tol() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractionParams {
    #[serde(default = "default_couple_paths")]
    pub paths: usize,
    pub horizon: f64,
    #[serde(default = "one")]
    pub record_every: usize,
    pub fit_window: (f64, f64),
    #[serde(default = "default_rate_tol")]
    pub tolerance: f64,
}

fn default_rate_tol() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentParams {
    pub delta: f64,
    pub horizon: f64,
    #[serde(default = "one")]
    pub record_every: usize,
    pub paths: usize,
    #[serde(default = "one")]
    pub i0: usize,
    pub scales: Vec<f64>,
    #[serde(default = "default_spread")]
    pub spread_limit: f64,
}

fn default_spread() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCondition {
    pub x: Vec<f64>,
    pub i: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantParams {
    pub inits: Vec<InitialCondition>,
    #[serde(default = "default_invariant_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_couple_delta")]
    pub delta: f64,
    #[serde(default = "default_couple_paths")]
    pub paths: usize,
    #[serde(default = "default_shift")]
    pub probe_shift: f64,
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default = "default_distance_threshold")]
    pub threshold: f64,
}

fn default_invariant_times() -> Vec<f64> {
    vec![1.0, 2.0, 5.0, 10.0, 20.0]
}

fn default_shift() -> f64 {
    5.0
}

fn default_cap() -> usize {
    rsdp::measure::DEFAULT_SAMPLE_CAP
}

fn default_distance_threshold() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    pub delta: f64,
    #[serde(default = "unit")]
    pub horizon: f64,
    pub x0: Vec<f64>,
    #[serde(default = "one")]
    pub i0: usize,
    /// Path index whose streams are dumped.
    #[serde(default)]
    pub path: u64,
}

/// A parsed config together with its model and the bytes the manifest hash covers.
#[derive(Debug)]
pub struct Loaded {
    pub config: ExperimentConfig,
    pub model_config: ModelConfig,
    pub model_path: PathBuf,
    pub hash: String,
}

impl Loaded {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let config: ExperimentConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let model_path = match path.parent() {
            Some(dir) if config.model.is_relative() => dir.join(&config.model),
            _ => config.model.clone(),
        };
        if !model_path.is_file() {
            return Err(CliError::Config(format!(
                "model file {} does not exist",
                model_path.display()
            )));
        }
        let model_text = std::fs::read_to_string(&model_path)
            .map_err(|e| CliError::Config(format!("{}: {e}", model_path.display())))?;
        let model_config =
            ModelConfig::parse(&model_text).map_err(|e| CliError::Config(format!("{}: {e}", model_path.display())))?;
        let mut h = Sha256::new();
        h.update((text.len() as u64).to_le_bytes());
        h.update(text.as_bytes());
        h.update((model_text.len() as u64).to_le_bytes());
        h.update(model_text.as_bytes());
        let hash = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Ok(Loaded {
            config,
            model_config,
            model_path,
            hash,
        })
    }

    pub fn model(&self) -> Result<RsdpModel, CliError> {
        self.model_config.build().map_err(CliError::from)
    }

    pub fn grid(&self, dim: usize) -> Result<GridSpec, CliError> {
        match self.config.grid {
            Some(g) => {
                g.check()?;
                Ok(g)
            }
            None => Ok(GridSpec::default_for(dim)?),
        }
    }
}

/// The section for a subcommand, or a config error naming it.
pub fn section<'a, T>(value: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    value
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("missing [{name}] section")))
}

pub fn require_paths(paths: usize, name: &str) -> Result<(), CliError> {
    if paths == 0 {
        return Err(CliError::Config(format!("`{name}` must be >= 1")));
    }
    Ok(())
}
