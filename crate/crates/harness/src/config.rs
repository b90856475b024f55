//! Experiment configuration file.
//!
//! A JSON document with five sections, `env`, `learner`, `options`,
//! `features` and `harness`, plus an optional `grid` for sweeps. Unknown keys
//! anywhere are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use moc_core::env::EnvSpec;
use moc_core::learning::{Algorithm, LearnerConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    #[serde(default)]
    pub learner: LearnerConfig,
    #[serde(default)]
    pub options: OptionsConfig,
    #[serde(default)]
    pub features: FeatureConfig,
    pub harness: HarnessConfig,
    /// Hyperparameter grid for `sweep`: dotted config paths to value lists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<BTreeMap<String, Vec<Value>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionSource {
    /// Every component is learned from scratch.
    Learned,
    /// The twelve FourRooms hallway options, kept fixed.
    Hallway,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaKind {
    /// Softmax over option values at temperature `tau`.
    SoftmaxQ,
    Parameterized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Linear,
    Network,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptionsConfig {
    pub source: OptionSource,
    pub n_options: usize,
    pub tau: f64,
    pub epsilon_mu: f64,
    pub meta: MetaKind,
    pub policy: PolicyKind,
    pub hidden: usize,
    /// Hallway options: probability mass spread over non-preferred actions.
    pub epsilon_action: f64,
    /// Hallway options: termination probability away from the target.
    pub off_target_termination: f64,
}

impl Default for OptionsConfig {
    fn default() -> Self {
        OptionsConfig {
            source: OptionSource::Learned,
            n_options: 4,
            tau: 1.0,
            epsilon_mu: 0.05,
            meta: MetaKind::SoftmaxQ,
            policy: PolicyKind::Linear,
            hidden: moc_core::approx::DEFAULT_HIDDEN,
            epsilon_action: 0.1,
            off_target_termination: moc_core::options::HALLWAY_OFF_TARGET_TERMINATION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeatureConfig {
    OneHot,
    Rbf {
        #[serde(default = "default_rbf_samples")]
        n_samples: usize,
        #[serde(default = "default_radii")]
        radii: Vec<f64>,
        #[serde(default = "default_kernels")]
        kernels_per_radius: usize,
        /// States kept from the fitting sample to weight the information radius.
        #[serde(default = "default_radius_states")]
        radius_states: usize,
    },
}

fn default_rbf_samples() -> usize {
    100_000
}

fn default_radii() -> Vec<f64> {
    vec![5.0, 2.0, 1.0, 0.5]
}

fn default_kernels() -> usize {
    32
}

fn default_radius_states() -> usize {
    500
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig::OneHot
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub n_seeds: usize,
    pub master_seed: u64,
    /// Episode budget (FourRooms).
    pub episodes: Option<usize>,
    /// Timestep budget (MountainCar).
    pub timesteps: Option<usize>,
    /// Episode index (FourRooms) or fraction of the timestep budget
    /// (MountainCar) at which the transfer mutation is applied.
    pub transfer_at: Option<f64>,
    /// Information radius every this many episodes; `None` disables it.
    pub info_radius_every: Option<usize>,
    pub output_dir: PathBuf,
    /// Worker threads across seeds; `None` uses every core.
    pub threads: Option<usize>,
    /// Largest number of grid points a sweep may expand to.
    pub max_grid_points: usize,
    /// Fraction of the final part of the run used for ranking.
    pub final_window: f64,
    /// Timesteps per aggregation bin for timestep budgets.
    pub bin_width: usize,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            n_seeds: 1,
            master_seed: 0,
            episodes: None,
            timesteps: None,
            transfer_at: None,
            info_radius_every: None,
            output_dir: PathBuf::from("runs/experiment"),
            threads: None,
            max_grid_points: 64,
            final_window: 0.1,
            bin_width: 10_000,
        }
    }
}

/// Run length in the units the environment uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Episodes(usize),
    Timesteps(usize),
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: ExperimentConfig =
            serde_path_to_error::deserialize(de).map_err(|e| HarnessError::Config(format!("{}: {}", e.path(), e.inner())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn budget(&self) -> Result<Budget> {
        match (self.harness.episodes, self.harness.timesteps) {
            (Some(e), None) => Ok(Budget::Episodes(e)),
            (None, Some(t)) => Ok(Budget::Timesteps(t)),
            _ => Err(HarnessError::Config("harness: set exactly one of `episodes` or `timesteps`".into())),
        }
    }

    /// The option count the learner actually uses.
    pub fn effective_options(&self) -> usize {
        match (self.learner.algorithm, self.options.source) {
            (Algorithm::Ac, _) => 1,
            (_, OptionSource::Hallway) => 12,
            _ => self.options.n_options,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        self.learner.validate().map_err(|e| HarnessError::Config(format!("learner: {e}")))?;
        if self.harness.n_seeds == 0 {
            return bad("harness.n_seeds: must be at least 1".into());
        }
        let budget = self.budget()?;
        match (budget, self.harness.transfer_at) {
            (Budget::Episodes(0), _) | (Budget::Timesteps(0), _) => return bad("harness: empty budget".into()),
            (Budget::Episodes(n), Some(t)) if !(t >= 0.0 && t < n as f64 && t.fract() == 0.0) => {
                return bad(format!("harness.transfer_at: {t} is not an episode index below {n}"));
            }
            (Budget::Timesteps(_), Some(t)) if !(t > 0.0 && t < 1.0) => {
                return bad(format!("harness.transfer_at: {t} is not a fraction in (0, 1)"));
            }
            _ => {}
        }
        if !(self.harness.final_window > 0.0 && self.harness.final_window <= 1.0) {
            return bad("harness.final_window: must be in (0, 1]".into());
        }
        if self.harness.bin_width == 0 || self.harness.max_grid_points == 0 {
            return bad("harness: bin_width and max_grid_points must be positive".into());
        }
        if self.harness.info_radius_every == Some(0) {
            return bad("harness.info_radius_every: must be positive".into());
        }
        if self.options.n_options == 0 {
            return bad("options.n_options: must be at least 1".into());
        }
        if self.options.hidden == 0 {
            return bad("options.hidden: must be positive".into());
        }
        match (&self.env, &self.features) {
            (EnvSpec::FourRooms(_), FeatureConfig::OneHot) => {}
            (EnvSpec::MountainCarSparse(_), FeatureConfig::Rbf { .. }) => {}
            (env, features) => {
                return bad(format!("features: {features:?} is not supported for {}", env.name()));
            }
        }
        if matches!(budget, Budget::Episodes(_)) != matches!(self.env, EnvSpec::FourRooms(_)) {
            return bad("harness: FourRooms runs use `episodes`, MountainCar runs use `timesteps`".into());
        }
        if let FeatureConfig::Rbf { n_samples, radii, kernels_per_radius, radius_states } = &self.features {
            if *n_samples < 1000 {
                return bad(format!("features.n_samples: {n_samples} is below 1000"));
            }
            if *kernels_per_radius == 0 || kernels_per_radius > n_samples {
                return bad(format!("features.kernels_per_radius: must be in 1..={n_samples}"));
            }
            if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
                return bad("features.radii: must be a nonempty list of positive numbers".into());
            }
            if *radius_states == 0 {
                return bad("features.radius_states: must be positive".into());
            }
        }
        if self.options.source == OptionSource::Hallway && !matches!(self.env, EnvSpec::FourRooms(_)) {
            return bad("options.source: hallway options exist only for four_rooms".into());
        }
        Ok(())
    }
}

/// Sets a dotted path (`learner.lr`) in a JSON document.
pub fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut node = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let Value::Object(map) = node else {
            return Err(HarnessError::Config(format!("grid key {path}: {part} is not inside an object")));
        };
        if i + 1 == parts.len() {
            map.insert((*part).to_string(), value);
            return Ok(());
        }
        node = map.entry((*part).to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}
