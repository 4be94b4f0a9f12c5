//! The design MDP and the PPO-trained designer that acts in it.
//!
//! States and actions are both latent vectors: after an action the next
//! state is the action itself.

mod checkpoint;
mod env;
mod nn;
mod policy;
mod ppo;
mod reward;
mod train;

use thiserror::Error;

use crate::generator::GeneratorError;
use crate::level::LevelError;
use crate::metrics::MetricError;
use crate::player::PlayerError;

pub use checkpoint::PolicyCheckpoint;
pub use env::{
    Candidate, DesignEnv, EnvState, Pipeline, SegmentMetrics, Step, StepInfo, RESET_RETRY_CAP,
};
pub use nn::{Adam, AdamParams, ForwardCache, Mlp};
pub use policy::{random_act, Action, ActMode, DesignerPolicy, GaussianPolicy, PolicyConfig};
pub use ppo::{
    compute_gae, ppo_update, surrogate_loss_and_grad, PpoConfig, PpoSample, ReturnScaler, RolloutBuffer, SurrogateStats,
    Transition, UpdateStats,
};
pub use reward::{compose_reward, Component, Normalizers, RawComponents, RewardConfig, RunningNormalizer};
pub use train::{initial_policy, train, train_with, TrainConfig, TrainLogRow, TrainOutcome, TrainProgress};

#[derive(Debug, Error)]
pub enum DesignerError {
    #[error("invalid designer config: {0}")]
    Config(String),
    #[error("non-finite {0}; training diverged")]
    NonFinite(&'static str),
    #[error("reward component {0:?} has no value")]
    MissingComponent(Component),
    #[error("rollout buffer is empty")]
    EmptyBuffer,
    #[error("step called on a finished episode")]
    StepAfterDone,
    #[error("no playable initial segment in {0} samples")]
    NoPlayableStart(usize),
    #[error("bad policy checkpoint: {0}")]
    Format(String),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Player(#[from] PlayerError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Level(#[from] LevelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
