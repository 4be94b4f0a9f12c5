use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::nn::{Adam, AdamParams, ForwardCache, Mlp};
use super::reward::RewardConfig;
use super::DesignerError;
use crate::generator::{LatentVector, LATENT_DIM};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Diagonal Gaussian over actions with a tanh-bounded mean network and a
/// learned, state-independent log standard deviation per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub mean: Mlp,
    pub log_std: Vec<f64>,
}

impl GaussianPolicy {
    pub fn new(mean: Mlp, init_log_std: f64) -> Self {
        let n = mean.output_size();
        Self { mean, log_std: vec![init_log_std; n] }
    }

    pub fn param_count(&self) -> usize {
        self.mean.params().len() + self.log_std.len()
    }

    pub fn forward(&self, state: &[f64]) -> ForwardCache {
        self.mean.forward_cached(state)
    }

    pub fn log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
        mean.iter()
            .zip(log_std)
            .zip(action)
            .map(|((m, ls), a)| {
                let z = (a - m) / ls.exp();
                -0.5 * z * z - ls - 0.5 * LN_2PI
            })
            .sum()
    }

    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|ls| ls + 0.5 * (1.0 + LN_2PI)).sum()
    }

    /// Flat parameter vector: mean-network parameters then log stds.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = self.mean.params().to_vec();
        out.extend_from_slice(&self.log_std);
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        let n = self.mean.params().len();
        self.mean.params_mut().copy_from_slice(&flat[..n]);
        self.log_std.copy_from_slice(&flat[n..]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActMode {
    Stochastic,
    Mean,
}

/// A sampled action: the clipped latent sent to the generator plus the raw
/// Gaussian sample and its log-probability, which training needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub latent: LatentVector,
    pub raw: Vec<f64>,
    pub log_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyConfig {
    pub hidden: Vec<usize>,
    pub init_log_std: f64,
    /// Scale of the initial action-mean output weights.
    pub mean_output_scale: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self { hidden: vec![64, 64], init_log_std: 0.5f64.ln(), mean_output_scale: 0.01 }
    }
}

/// The RL designer: Gaussian actor, value critic, and their optimizers.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignerPolicy {
    pub actor: GaussianPolicy,
    pub critic: Mlp,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
    /// Reward the policy was (or is being) trained with.
    pub reward: RewardConfig,
}

impl DesignerPolicy {
    pub fn new<R: Rng + ?Sized>(
        cfg: &PolicyConfig,
        adam: AdamParams,
        reward: RewardConfig,
        rng: &mut R,
    ) -> Self {
        let mut sizes = vec![LATENT_DIM];
        sizes.extend(&cfg.hidden);
        let mut actor_sizes = sizes.clone();
        actor_sizes.push(LATENT_DIM);
        let mut critic_sizes = sizes;
        critic_sizes.push(1);
        let actor = GaussianPolicy::new(
            Mlp::new(&actor_sizes, true, cfg.mean_output_scale, rng),
            cfg.init_log_std,
        );
        let critic = Mlp::new(&critic_sizes, false, 1.0, rng);
        Self {
            actor_opt: Adam::new(actor.param_count(), adam),
            critic_opt: Adam::new(critic.params().len(), adam),
            actor,
            critic,
            reward,
        }
    }

    pub fn act<R: Rng + ?Sized>(
        &self,
        state: &LatentVector,
        mode: ActMode,
        rng: &mut R,
    ) -> Result<Action, DesignerError> {
        let mean = self.actor.mean.forward(state.as_slice());
        if mean.iter().any(|v| !v.is_finite()) || self.actor.log_std.iter().any(|v| !v.is_finite()) {
            return Err(DesignerError::NonFinite("policy output"));
        }
        let raw: Vec<f64> = match mode {
            ActMode::Mean => mean.clone(),
            ActMode::Stochastic => mean
                .iter()
                .zip(&self.actor.log_std)
                .map(|(m, ls)| m + ls.exp() * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        };
        let log_prob = GaussianPolicy::log_prob(&mean, &self.actor.log_std, &raw);
        let latent = LatentVector::from_slice(&raw).expect("action has latent dimension");
        Ok(Action { latent, raw, log_prob })
    }

    pub fn value(&self, state: &LatentVector) -> f64 {
        self.critic.forward(state.as_slice())[0]
    }
}

/// The random designer: uniform latent actions.
pub fn random_act<R: Rng + ?Sized>(rng: &mut R) -> LatentVector {
    LatentVector::uniform(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn policy(seed: u64) -> DesignerPolicy {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DesignerPolicy::new(&PolicyConfig::default(), AdamParams::default(), RewardConfig::default(), &mut rng)
    }

    #[test]
    fn shapes() {
        let p = policy(0);
        assert_eq!(p.actor.mean.sizes(), &[32, 64, 64, 32]);
        assert_eq!(p.critic.sizes(), &[32, 64, 64, 1]);
        assert!(p.actor.log_std.iter().all(|&v| (v - 0.5f64.ln()).abs() < 1e-15));
    }

    #[test]
    fn mean_mode_is_deterministic_and_bounded() {
        let p = policy(1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = LatentVector::uniform(&mut rng);
        let a = p.act(&s, ActMode::Mean, &mut rng).unwrap();
        let b = p.act(&s, ActMode::Mean, &mut rng).unwrap();
        assert_eq!(a, b);
        for _ in 0..100 {
            let a = p.act(&s, ActMode::Stochastic, &mut rng).unwrap();
            assert!(a.latent.as_slice().iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn fresh_policy_dispersion() {
        let p = policy(2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let zero = LatentVector::zeros();
        let n = 1000;
        let samples: Vec<Vec<f64>> =
            (0..n).map(|_| p.act(&zero, ActMode::Stochastic, &mut rng).unwrap().raw).collect();
        for d in 0..LATENT_DIM {
            let mean = samples.iter().map(|s| s[d]).sum::<f64>() / n as f64;
            let var = samples.iter().map(|s| (s[d] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            assert!(mean.abs() < 0.1, "dim {d} mean {mean}");
            assert!((var.sqrt() - 0.5).abs() < 0.05, "dim {d} std {}", var.sqrt());
        }
    }

    #[test]
    fn non_finite_output_is_an_error() {
        let mut p = policy(3);
        p.actor.mean.params_mut()[0] = f64::NAN;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = LatentVector::uniform(&mut rng);
        assert!(matches!(p.act(&s, ActMode::Mean, &mut rng), Err(DesignerError::NonFinite(_))));
    }

    #[test]
    fn random_designer() {
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            assert_eq!(random_act(&mut a), random_act(&mut b));
        }
        let n = 10_000;
        let mut sums = [0.0; LATENT_DIM];
        for _ in 0..n {
            let z = random_act(&mut a);
            for (s, v) in sums.iter_mut().zip(z.as_slice()) {
                assert!((-1.0..=1.0).contains(v));
                *s += v;
            }
        }
        assert!(sums.iter().all(|s| (s / n as f64).abs() < 0.05));
    }

    #[test]
    fn log_prob_matches_closed_form() {
        let lp = GaussianPolicy::log_prob(&[0.0], &[0.0], &[1.0]);
        assert!((lp - (-0.5 - 0.5 * LN_2PI)).abs() < 1e-15);
    }
}
