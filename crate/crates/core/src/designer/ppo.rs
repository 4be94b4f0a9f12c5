use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::policy::{DesignerPolicy, GaussianPolicy};
use super::DesignerError;
use crate::generator::LatentVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub clip_ratio: f64,
    pub discount: f64,
    /// Exponential smoothing of the advantage estimate.
    pub gae_lambda: f64,
    pub rollout_steps: usize,
    pub minibatch_size: usize,
    pub update_epochs: usize,
    pub learning_rate: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Global gradient-norm cap per network; 0 disables it.
    pub max_grad_norm: f64,
    pub normalize_advantages: bool,
    /// Divide rewards by a running standard deviation of the discounted
    /// return before learning from them.
    pub scale_rewards: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip_ratio: 0.2,
            discount: 0.99,
            gae_lambda: 0.95,
            rollout_steps: 2048,
            minibatch_size: 64,
            update_epochs: 4,
            learning_rate: 3e-4,
            entropy_coef: 0.01,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            normalize_advantages: true,
            scale_rewards: true,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), DesignerError> {
        let bad = |msg: &str| Err(DesignerError::Config(msg.to_string()));
        if !(self.clip_ratio > 0.0) {
            return bad("clip_ratio must be > 0");
        }
        if !(0.0..=1.0).contains(&self.discount) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("discount and gae_lambda must lie in [0, 1]");
        }
        if self.rollout_steps == 0 || self.minibatch_size == 0 || self.update_epochs == 0 {
            return bad("rollout_steps, minibatch_size and update_epochs must be >= 1");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if self.entropy_coef < 0.0 || self.value_coef < 0.0 || self.max_grad_norm < 0.0 {
            return bad("coefficients must be non-negative");
        }
        Ok(())
    }
}

/// One environment step as seen by the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: LatentVector,
    /// Unclipped Gaussian sample.
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    /// Value of the next state; 0 when `terminal`.
    pub next_value: f64,
    /// The episode ended for good (unplayable segment).
    pub terminal: bool,
    /// The episode ended here for any reason, including the segment cap.
    pub episode_end: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBuffer {
    pub transitions: Vec<Transition>,
}

impl RolloutBuffer {
    pub fn push(&mut self, t: Transition) {
        self.transitions.push(t);
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
    }
}

/// Generalized advantage estimates and the matching value targets. The
/// recursion is cut at episode ends and at the end of the buffer; each
/// step bootstraps from its own `next_value`.
pub fn compute_gae(transitions: &[Transition], discount: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = transitions.len();
    let mut advantages = vec![0.0; n];
    let mut next = 0.0;
    for i in (0..n).rev() {
        let t = &transitions[i];
        if t.episode_end {
            next = 0.0;
        }
        let bootstrap = if t.terminal { 0.0 } else { t.next_value };
        let delta = t.reward + discount * bootstrap - t.value;
        next = delta + discount * lambda * next;
        advantages[i] = next;
    }
    let returns = advantages.iter().zip(transitions).map(|(a, t)| a + t.value).collect();
    (advantages, returns)
}

/// Running standard deviation of the discounted return, used to put
/// rewards on a unit scale for the critic.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnScaler {
    discount: f64,
    ret: f64,
    count: f64,
    mean: f64,
    m2: f64,
}

impl ReturnScaler {
    pub fn new(discount: f64) -> Self {
        Self { discount, ret: 0.0, count: 0.0, mean: 0.0, m2: 0.0 }
    }

    /// Scales `reward` and advances the running return; `episode_end`
    /// resets the return after this step.
    pub fn scale(&mut self, reward: f64, episode_end: bool) -> f64 {
        self.ret = self.ret * self.discount + reward;
        self.count += 1.0;
        let delta = self.ret - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (self.ret - self.mean);
        if episode_end {
            self.ret = 0.0;
        }
        let var = self.m2 / self.count;
        if var > 0.0 {
            reward / (var + 1e-8).sqrt()
        } else {
            reward
        }
    }
}

/// Input to the clipped surrogate for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PpoSample {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub old_log_prob: f64,
    pub advantage: f64,
}

/// Loss terms from one surrogate evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SurrogateStats {
    pub policy_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

/// Negated clipped surrogate minus the entropy bonus, averaged over
/// `batch`, and its gradient with respect to the policy's flat parameters.
pub fn surrogate_loss_and_grad(
    policy: &GaussianPolicy,
    batch: &[PpoSample],
    clip_ratio: f64,
    entropy_coef: f64,
) -> (f64, Vec<f64>, SurrogateStats) {
    let n_mean = policy.mean.params().len();
    let mut grad = vec![0.0; policy.param_count()];
    let inv_n = 1.0 / batch.len() as f64;
    let mut surrogate = 0.0;
    let mut clipped = 0usize;
    let mut kl = 0.0;
    let stds: Vec<f64> = policy.log_std.iter().map(|v| v.exp()).collect();
    for s in batch {
        let cache = policy.forward(&s.state);
        let mean = cache.output();
        let log_prob = GaussianPolicy::log_prob(mean, &policy.log_std, &s.action);
        let log_ratio = log_prob - s.old_log_prob;
        let ratio = log_ratio.exp();
        let unclipped = ratio * s.advantage;
        let clipped_obj = ratio.clamp(1.0 - clip_ratio, 1.0 + clip_ratio) * s.advantage;
        surrogate += unclipped.min(clipped_obj);
        if (ratio - 1.0).abs() > clip_ratio {
            clipped += 1;
        }
        kl += ratio - 1.0 - log_ratio;
        // d(-min(...))/d log_prob is -A*ratio when the unclipped branch is active
        let active = if s.advantage >= 0.0 { ratio <= 1.0 + clip_ratio } else { ratio >= 1.0 - clip_ratio };
        if !active {
            continue;
        }
        let coef = -s.advantage * ratio * inv_n;
        let mut grad_mean = vec![0.0; mean.len()];
        for d in 0..mean.len() {
            let z = (s.action[d] - mean[d]) / stds[d];
            grad_mean[d] = coef * z / stds[d];
            grad[n_mean + d] += coef * (z * z - 1.0);
        }
        policy.mean.backward(&cache, &grad_mean, &mut grad[..n_mean]);
    }
    let entropy = policy.entropy();
    for g in &mut grad[n_mean..] {
        *g -= entropy_coef;
    }
    let policy_loss = -surrogate * inv_n;
    let stats = SurrogateStats {
        policy_loss,
        entropy,
        clip_fraction: clipped as f64 * inv_n,
        approx_kl: kl * inv_n,
    };
    (policy_loss - entropy_coef * entropy, grad, stats)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

fn clip_norm(grad: &mut [f64], max_norm: f64) {
    if max_norm <= 0.0 {
        return;
    }
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= scale);
    }
}

/// Several epochs of minibatch PPO over `buffer`, updating actor and critic
/// in place. Returns statistics averaged over all minibatches.
pub fn ppo_update<R: Rng + ?Sized>(
    policy: &mut DesignerPolicy,
    buffer: &RolloutBuffer,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats, DesignerError> {
    if buffer.is_empty() {
        return Err(DesignerError::EmptyBuffer);
    }
    let (advantages, returns) = compute_gae(&buffer.transitions, cfg.discount, cfg.gae_lambda);
    policy.actor_opt.params.learning_rate = cfg.learning_rate;
    policy.critic_opt.params.learning_rate = cfg.learning_rate;
    let mut indices: Vec<usize> = (0..buffer.len()).collect();
    let mut totals = UpdateStats::default();
    let mut batches = 0usize;
    for _ in 0..cfg.update_epochs {
        indices.shuffle(rng);
        for chunk in indices.chunks(cfg.minibatch_size) {
            let mut adv: Vec<f64> = chunk.iter().map(|&i| advantages[i]).collect();
            if cfg.normalize_advantages && adv.len() > 1 {
                let mean = adv.iter().sum::<f64>() / adv.len() as f64;
                let std = (adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / adv.len() as f64).sqrt();
                if std > 1e-8 {
                    adv.iter_mut().for_each(|a| *a = (*a - mean) / std);
                } else {
                    adv.iter_mut().for_each(|a| *a -= mean);
                }
            }
            let samples: Vec<PpoSample> = chunk
                .iter()
                .zip(&adv)
                .map(|(&i, &a)| {
                    let t = &buffer.transitions[i];
                    PpoSample {
                        state: t.state.as_slice().to_vec(),
                        action: t.action.clone(),
                        old_log_prob: t.log_prob,
                        advantage: a,
                    }
                })
                .collect();
            let (loss, mut grad, stats) =
                surrogate_loss_and_grad(&policy.actor, &samples, cfg.clip_ratio, cfg.entropy_coef);
            if !loss.is_finite() {
                return Err(DesignerError::NonFinite("policy loss"));
            }
            clip_norm(&mut grad, cfg.max_grad_norm);
            let mut flat = policy.actor.flat_params();
            policy.actor_opt.step(&mut flat, &grad);
            policy.actor.set_flat_params(&flat);

            let mut value_grad = vec![0.0; policy.critic.params().len()];
            let mut value_loss = 0.0;
            let scale = 2.0 * cfg.value_coef / chunk.len() as f64;
            for &i in chunk {
                let cache = policy.critic.forward_cached(buffer.transitions[i].state.as_slice());
                let err = cache.output()[0] - returns[i];
                value_loss += err * err;
                policy.critic.backward(&cache, &[scale * err], &mut value_grad);
            }
            value_loss /= chunk.len() as f64;
            if !value_loss.is_finite() {
                return Err(DesignerError::NonFinite("value loss"));
            }
            clip_norm(&mut value_grad, cfg.max_grad_norm);
            policy.critic_opt.step(policy.critic.params_mut(), &value_grad);

            totals.policy_loss += stats.policy_loss;
            totals.value_loss += value_loss;
            totals.entropy += stats.entropy;
            totals.clip_fraction += stats.clip_fraction;
            totals.approx_kl += stats.approx_kl;
            batches += 1;
        }
    }
    let b = batches as f64;
    Ok(UpdateStats {
        policy_loss: totals.policy_loss / b,
        value_loss: totals.value_loss / b,
        entropy: totals.entropy / b,
        clip_fraction: totals.clip_fraction / b,
        approx_kl: totals.approx_kl / b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designer::nn::{AdamParams, Mlp};
    use crate::designer::policy::PolicyConfig;
    use crate::designer::reward::RewardConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn transition(reward: f64, value: f64, next_value: f64, terminal: bool, end: bool) -> Transition {
        Transition {
            state: LatentVector::zeros(),
            action: vec![0.0; 32],
            log_prob: 0.0,
            reward,
            value,
            next_value,
            terminal,
            episode_end: end,
        }
    }

    #[test]
    fn gae_with_unit_lambda_is_discounted_return() {
        let ts = vec![
            transition(1.0, 0.0, 0.0, false, false),
            transition(1.0, 0.0, 0.0, false, false),
            transition(1.0, 0.0, 0.0, true, true),
        ];
        let (adv, ret) = compute_gae(&ts, 0.5, 1.0);
        assert_eq!(adv, vec![1.75, 1.5, 1.0]);
        assert_eq!(ret, adv);
    }

    #[test]
    fn gae_bootstraps_on_truncation_only() {
        let trunc = vec![transition(1.0, 0.0, 10.0, false, true), transition(5.0, 0.0, 0.0, true, true)];
        let (adv, _) = compute_gae(&trunc, 0.9, 0.95);
        assert!((adv[0] - 10.0).abs() < 1e-12);
        assert_eq!(adv[1], 5.0);
    }

    #[test]
    fn clip_definition() {
        // ratio 1.5 with positive advantage: objective uses 1.2 and has zero gradient
        let mean = Mlp::from_params(&[1, 1], vec![0.0, 0.0], false).unwrap();
        let policy = GaussianPolicy::new(mean, 0.0);
        let lp = GaussianPolicy::log_prob(&[0.0], &[0.0], &[0.0]);
        let sample = PpoSample {
            state: vec![0.3],
            action: vec![0.0],
            old_log_prob: lp - 1.5f64.ln(),
            advantage: 2.0,
        };
        let (loss, grad, stats) = surrogate_loss_and_grad(&policy, &[sample], 0.2, 0.0);
        assert!((loss + 1.2 * 2.0).abs() < 1e-12);
        assert!(grad.iter().all(|&g| g == 0.0));
        assert_eq!(stats.clip_fraction, 1.0);
    }

    fn filled_buffer(advantage_free: bool) -> RolloutBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut buf = RolloutBuffer::default();
        for i in 0..130 {
            let state = LatentVector::uniform(&mut rng);
            let action: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (reward, value) = if advantage_free { (0.0, 0.0) } else { (rng.random(), 0.1) };
            buf.push(Transition {
                state,
                action,
                log_prob: -20.0,
                reward,
                value,
                next_value: value,
                terminal: false,
                episode_end: i % 50 == 49,
            });
        }
        if advantage_free {
            for t in &mut buf.transitions {
                t.next_value = 0.0;
            }
        }
        buf
    }

    fn fresh_policy() -> DesignerPolicy {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        DesignerPolicy::new(&PolicyConfig::default(), AdamParams::default(), RewardConfig::default(), &mut rng)
    }

    #[test]
    fn zero_advantage_leaves_actor_unchanged() {
        let mut p = fresh_policy();
        let before = p.actor.clone();
        let cfg = PpoConfig { entropy_coef: 0.0, normalize_advantages: false, ..Default::default() };
        ppo_update(&mut p, &filled_buffer(true), &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(p.actor, before);
    }

    #[test]
    fn updates_are_deterministic() {
        let buf = filled_buffer(false);
        let cfg = PpoConfig::default();
        let mut a = fresh_policy();
        let mut b = fresh_policy();
        let sa = ppo_update(&mut a, &buf, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let sb = ppo_update(&mut b, &buf, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        assert_ne!(a, fresh_policy());
    }

    #[test]
    fn empty_buffer_is_an_error() {
        let mut p = fresh_policy();
        let r = ppo_update(&mut p, &RolloutBuffer::default(), &PpoConfig::default(), &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(r, Err(DesignerError::EmptyBuffer)));
    }
}
