use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::env::{DesignEnv, Pipeline};
use super::nn::AdamParams;
use super::policy::{ActMode, DesignerPolicy, PolicyConfig};
use super::ppo::{ppo_update, PpoConfig, ReturnScaler, RolloutBuffer, Transition};
use super::reward::{Normalizers, RewardConfig};
use super::DesignerError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Environment steps to train for.
    pub total_steps: u64,
    /// Designed segments per episode before it is cut off.
    pub max_segments: usize,
    pub ppo: PpoConfig,
    pub policy: PolicyConfig,
    /// Write a checkpoint every this many PPO updates; 0 disables them.
    pub checkpoint_every: usize,
    /// Filled from the run seed; not part of the config file.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            total_steps: 100_000,
            max_segments: 100,
            ppo: PpoConfig::default(),
            policy: PolicyConfig::default(),
            checkpoint_every: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), DesignerError> {
        if self.max_segments == 0 {
            return Err(DesignerError::Config("max_segments must be >= 1".into()));
        }
        if self.policy.hidden.iter().any(|&h| h == 0) {
            return Err(DesignerError::Config("hidden layers must be non-empty".into()));
        }
        self.ppo.validate()
    }
}

/// One row of the training log, written after every PPO update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainLogRow {
    pub step: u64,
    pub episodes: usize,
    pub mean_return: f64,
    /// Mean designed segments per finished episode.
    pub mean_segments: f64,
    pub mean_fun: f64,
    pub mean_deviation: f64,
    pub clip_fraction: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub approx_kl: f64,
    pub entropy: f64,
}

impl TrainLogRow {
    pub fn write_csv<W: Write>(out: W, rows: &[TrainLogRow]) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Passed to the progress callback after each update.
pub struct TrainProgress<'a> {
    pub update: usize,
    pub row: &'a TrainLogRow,
    pub policy: &'a DesignerPolicy,
    pub normalizers: &'a Normalizers,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: DesignerPolicy,
    pub normalizers: Normalizers,
    pub log: Vec<TrainLogRow>,
    pub steps: u64,
}

// Independent random streams derived from the run seed.
const STREAM_INIT: u64 = 0;
const STREAM_ENV: u64 = 1;
const STREAM_ACT: u64 = 2;
const STREAM_SHUFFLE: u64 = 3;

pub(crate) fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// The initial policy `train` starts from for this config.
pub fn initial_policy(cfg: &TrainConfig, reward: &RewardConfig) -> DesignerPolicy {
    let adam = AdamParams { learning_rate: cfg.ppo.learning_rate, ..AdamParams::default() };
    DesignerPolicy::new(&cfg.policy, adam, reward.clone(), &mut stream(cfg.seed, STREAM_INIT))
}

pub fn train(cfg: &TrainConfig, reward: &RewardConfig, pipeline: Pipeline) -> Result<TrainOutcome, DesignerError> {
    train_with(cfg, reward, pipeline, |_| Ok(()))
}

/// Collects rollouts of `rollout_steps` environment steps and applies a PPO
/// update after each, until `total_steps` steps have been taken. Single
/// threaded and reproducible from `cfg.seed`.
pub fn train_with<F>(
    cfg: &TrainConfig,
    reward: &RewardConfig,
    pipeline: Pipeline,
    mut on_update: F,
) -> Result<TrainOutcome, DesignerError>
where
    F: FnMut(&TrainProgress<'_>) -> Result<(), DesignerError>,
{
    cfg.validate()?;
    reward.validate()?;
    let mut policy = initial_policy(cfg, reward);
    let mut env = DesignEnv::new(pipeline, reward.clone(), cfg.max_segments, stream(cfg.seed, STREAM_ENV));
    let mut act_rng = stream(cfg.seed, STREAM_ACT);
    let mut shuffle_rng = stream(cfg.seed, STREAM_SHUFFLE);
    let mut log = Vec::new();
    let mut steps = 0u64;
    if cfg.total_steps == 0 {
        return Ok(TrainOutcome { policy, normalizers: env.normalizers().clone(), log, steps });
    }

    let mut state = env.reset()?.current_latent;
    let mut episode_return = 0.0;
    let mut episode_segments = 0usize;
    let mut buffer = RolloutBuffer::default();
    let mut scaler = ReturnScaler::new(cfg.ppo.discount);
    while steps < cfg.total_steps {
        buffer.clear();
        let n = (cfg.total_steps - steps).min(cfg.ppo.rollout_steps as u64);
        let (mut returns, mut lengths) = (Vec::new(), Vec::new());
        let (mut fun_sum, mut dev_sum, mut measured) = (0.0, 0.0, 0usize);
        for _ in 0..n {
            let value = policy.value(&state);
            let action = policy.act(&state, ActMode::Stochastic, &mut act_rng)?;
            let step = env.step(&action.latent)?;
            if let Some(m) = step.info.metrics {
                fun_sum += m.fun;
                dev_sum += m.deviation;
                measured += 1;
                episode_segments += 1;
            }
            episode_return += step.reward;
            let terminal = step.done && !step.truncated;
            let next_value = if terminal { 0.0 } else { policy.value(&action.latent) };
            let reward = if cfg.ppo.scale_rewards { scaler.scale(step.reward, step.done) } else { step.reward };
            buffer.push(Transition {
                state,
                action: action.raw,
                log_prob: action.log_prob,
                reward,
                value,
                next_value,
                terminal,
                episode_end: step.done,
            });
            steps += 1;
            if step.done {
                returns.push(episode_return);
                lengths.push(episode_segments as f64);
                episode_return = 0.0;
                episode_segments = 0;
                state = env.reset()?.current_latent;
            } else {
                state = action.latent;
            }
        }
        let stats = ppo_update(&mut policy, &buffer, &cfg.ppo, &mut shuffle_rng)?;
        let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
        let per_segment = |s: f64| if measured == 0 { f64::NAN } else { s / measured as f64 };
        let row = TrainLogRow {
            step: steps,
            episodes: returns.len(),
            mean_return: mean(&returns),
            mean_segments: mean(&lengths),
            mean_fun: per_segment(fun_sum),
            mean_deviation: per_segment(dev_sum),
            clip_fraction: stats.clip_fraction,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            approx_kl: stats.approx_kl,
            entropy: stats.entropy,
        };
        log.push(row);
        on_update(&TrainProgress { update: log.len(), row: &row, policy: &policy, normalizers: env.normalizers() })?;
    }
    Ok(TrainOutcome { policy, normalizers: env.normalizers().clone(), log, steps })
}
