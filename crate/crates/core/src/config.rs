//! The run configuration file: one TOML document holding every setting a
//! command needs. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::designer::{Pipeline, RewardConfig, TrainConfig};
use crate::generator::{Backend, Repairer};
use crate::level::{TileAlphabet, SEGMENT_SIZE};
use crate::metrics::MetricConfig;
use crate::online::{EvalConfig, OnlineConfig};
use crate::player::{PhysicsParams, Playtester};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    #[default]
    Procedural,
    Pool,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackendConfig {
    pub kind: BackendChoice,
    /// Column stride used when slicing the corpus into pool segments.
    pub pool_stride: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self { kind: BackendChoice::Procedural, pool_stride: 7 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub pool: Option<PathBuf>,
    pub decoder: Option<PathBuf>,
    pub alphabet: Option<PathBuf>,
    pub policy: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seeds every random stream of a command.
    pub seed: u64,
    pub backend: BackendConfig,
    pub metrics: MetricConfig,
    pub reward: RewardConfig,
    pub train: TrainConfig,
    pub online: OnlineConfig,
    pub evaluation: EvalConfig,
    pub physics: PhysicsParams,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            backend: BackendConfig::default(),
            metrics: MetricConfig::default(),
            reward: RewardConfig::default(),
            train: TrainConfig::default(),
            online: OnlineConfig::default(),
            evaluation: EvalConfig::default(),
            physics: PhysicsParams::default(),
            paths: Paths::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.metrics.validate().map_err(|e| invalid(&e))?;
        self.reward.validate().map_err(|e| invalid(&e))?;
        self.train.validate().map_err(|e| invalid(&e))?;
        self.online.validate().map_err(|e| invalid(&e))?;
        self.physics.validate(SEGMENT_SIZE).map_err(|e| invalid(&e))?;
        if self.backend.pool_stride == 0 {
            return Err(ConfigError::Invalid("backend.pool_stride must be >= 1".into()));
        }
        let e = &self.evaluation;
        if e.initial_segments == 0 || e.trials_per_init == 0 || e.max_segments == 0 {
            return Err(ConfigError::Invalid("evaluation sizes must be >= 1".into()));
        }
        Ok(())
    }

    /// Training settings with the run seed applied.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seed, ..self.train.clone() }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig { seed: self.seed, ..self.evaluation.clone() }
    }

    pub fn alphabet(&self) -> Result<TileAlphabet, crate::level::LevelError> {
        match &self.paths.alphabet {
            Some(p) => TileAlphabet::load(p),
            None => Ok(TileAlphabet::vglc()),
        }
    }

    /// Pipeline around an already-loaded backend.
    pub fn pipeline(&self, backend: Backend, alphabet: TileAlphabet) -> Pipeline {
        Pipeline {
            backend,
            repairer: Repairer::new(alphabet),
            playtester: Playtester::new(self.physics),
            metrics: self.metrics.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_desk_config_parses() {
        let cfg = RunConfig::from_toml_str(include_str!("../../../configs/desk.toml")).unwrap();
        assert_eq!(cfg.train.ppo.discount, 0.9);
        assert_eq!(cfg.online.resample_mode, crate::online::ResampleMode::Random);
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml_string();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_document_uses_defaults() {
        let cfg = RunConfig::from_toml_str(
            "seed = 9\n[reward]\ncomponents = [\"F\", \"P\"]\n[online]\nresample_mode = \"policy\"\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.reward.label(), "FP");
        assert_eq!(cfg.metrics, MetricConfig::default());
        assert_eq!(cfg.online.resample_cap, 20);
        assert_eq!(cfg.train_config().seed, 9);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::from_toml_str("sed = 1\n"), Err(ConfigError::Parse(_))));
        assert!(matches!(
            RunConfig::from_toml_str("[metrics]\nepsilon = 0.001\nwindows = 3\n"),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(matches!(
            RunConfig::from_toml_str("[online]\nresample_cap = 0\n"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            RunConfig::from_toml_str("[reward]\ncomponents = []\n"),
            Err(ConfigError::Invalid(_))
        ));
    }
}
