//! Experiment harness: training runs, evaluation protocols, and trajectory
//! export.

pub mod eval;
pub mod export;
pub mod train;

pub use eval::{evaluate, EvalOptions, EvalReport, PerceptionMode, SeedEval};
pub use export::export_trial;
pub use train::{train_run, IterationRecord, TrainResult};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::ScenarioConfig;
use crate::error::{Error, Result};
use crate::grounding::MisalignmentModel;
use crate::mappo::TrainConfig;
use crate::policy::Method;

/// Top-level experiment configuration (TOML).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub method: String,
    /// Scenario preset name; ignored when `scenario` is inlined.
    pub scenario_preset: String,
    /// Full inline scenario (overrides the preset).
    pub scenario: Option<ScenarioConfig>,
    pub train: TrainConfig,
    pub iterations: usize,
    /// Periodic checkpoint cadence in iterations (0 = final only).
    pub checkpoint_every: usize,
    pub eval_trials: usize,
    pub eval_seeds: Vec<u64>,
    pub perception: PerceptionMode,
    pub follower_misalignment: MisalignmentModel,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: "colf".into(),
            scenario_preset: "one_goal".into(),
            scenario: None,
            train: TrainConfig::default(),
            iterations: 100,
            checkpoint_every: 0,
            eval_trials: 100,
            eval_seeds: vec![0, 1, 2],
            perception: PerceptionMode::Vector,
            follower_misalignment: MisalignmentModel::identity(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.method()?;
        self.scenario()?.validate()?;
        self.follower_misalignment.validate()?;
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be positive".into()));
        }
        Ok(())
    }

    pub fn method(&self) -> Result<Method> {
        Method::parse(&self.method)
    }

    pub fn scenario(&self) -> Result<ScenarioConfig> {
        match &self.scenario {
            Some(s) => Ok(s.clone()),
            None => ScenarioConfig::preset_or_file(&self.scenario_preset),
        }
    }
}
