//! Endless online generation with resampling, the batch evaluation harness
//! and latency measurement.

mod evaluate;
mod generate;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::designer::{ActMode, DesignerError, DesignerPolicy, RewardConfig};
use crate::generator::{LatentVector, LATENT_DIM};

pub use evaluate::{
    evaluate_policy, initial_states, EvalConfig, EvaluationReport, LevelRow, Summary,
};
pub use generate::{
    benchmark_latency, generate_online, GenerationReport, LatencyStats, SegmentRecord,
};

#[derive(Debug, Error)]
pub enum OnlineError {
    #[error("invalid online config: {0}")]
    Config(String),
    #[error(transparent)]
    Designer(#[from] DesignerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResampleMode {
    /// A fresh stochastic action from the policy for the same state.
    Policy,
    /// A standard normal latent clipped into the latent box.
    Random,
}

impl std::str::FromStr for ResampleMode {
    type Err = OnlineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "policy" => Ok(Self::Policy),
            "random" => Ok(Self::Random),
            _ => Err(OnlineError::Config(format!("unknown resample mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OnlineConfig {
    pub resample_mode: ResampleMode,
    /// Resamples allowed for one segment before the run fails.
    pub resample_cap: usize,
    pub target_segments: usize,
    /// Optional per-segment budget; segments over it are counted, not cut.
    pub time_budget_ms: Option<f64>,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        Self { resample_mode: ResampleMode::Random, resample_cap: 20, target_segments: 100, time_budget_ms: None }
    }
}

impl OnlineConfig {
    pub fn validate(&self) -> Result<(), OnlineError> {
        if self.resample_cap == 0 || self.target_segments == 0 {
            return Err(OnlineError::Config("resample_cap and target_segments must be >= 1".into()));
        }
        if self.time_budget_ms.is_some_and(|b| !(b > 0.0)) {
            return Err(OnlineError::Config("time_budget_ms must be > 0".into()));
        }
        Ok(())
    }
}

/// Who picks the next latent: a trained policy or the uniform random
/// designer.
#[derive(Debug, Clone, Copy)]
pub enum Agent<'a> {
    Trained { policy: &'a DesignerPolicy, mode: ActMode },
    Random,
}

impl Agent<'_> {
    pub fn act<R: Rng + ?Sized>(&self, state: &LatentVector, rng: &mut R) -> Result<LatentVector, DesignerError> {
        match self {
            Agent::Trained { policy, mode } => Ok(policy.act(state, *mode, rng)?.latent),
            Agent::Random => Ok(crate::designer::random_act(rng)),
        }
    }

    pub fn resample<R: Rng + ?Sized>(
        &self,
        state: &LatentVector,
        mode: ResampleMode,
        rng: &mut R,
    ) -> Result<LatentVector, DesignerError> {
        match (mode, self) {
            (ResampleMode::Policy, Agent::Trained { policy, .. }) => {
                Ok(policy.act(state, ActMode::Stochastic, rng)?.latent)
            }
            (ResampleMode::Policy, Agent::Random) => Ok(crate::designer::random_act(rng)),
            (ResampleMode::Random, _) => Ok(normal_latent(rng)),
        }
    }

    /// Whether an unplayable segment ends an evaluation level.
    pub fn stops_on_unplayable(&self) -> bool {
        match self {
            Agent::Trained { policy, .. } => policy.reward.has(crate::designer::Component::P),
            Agent::Random => false,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Agent::Trained { policy, .. } => policy.reward.label(),
            Agent::Random => "random".into(),
        }
    }

    pub fn reward(&self) -> Option<&RewardConfig> {
        match self {
            Agent::Trained { policy, .. } => Some(&policy.reward),
            Agent::Random => None,
        }
    }
}

/// Standard normal sample clipped into `[-1, 1]^32`.
pub fn normal_latent<R: Rng + ?Sized>(rng: &mut R) -> LatentVector {
    let v: Vec<f64> = (0..LATENT_DIM).map(|_| rng.sample(StandardNormal)).collect();
    LatentVector::from_slice(&v).expect("latent dimension")
}
