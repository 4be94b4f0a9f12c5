//! Trains a designer policy with PPO and saves a checkpoint.
//!
//!     cargo run --release --example train_designer -- [steps] [reward] [out.bin]
//!
//! Defaults: 20000 steps, reward FHP, checkpoint in the temp directory.

use std::path::PathBuf;

use edrl::designer::{train_with, Pipeline, PolicyCheckpoint, RewardConfig, TrainConfig};
use edrl::generator::Backend;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let steps: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20_000);
    let reward = RewardConfig::parse(&args.next().unwrap_or_else(|| "FHP".into()))?;
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("edrl_policy.bin"));

    let mut cfg = TrainConfig { total_steps: steps, seed: 7, ..Default::default() };
    cfg.ppo.discount = 0.9;
    cfg.ppo.learning_rate = 1e-3;

    println!("{:>7} {:>8} {:>8} {:>8} {:>7} {:>8}", "step", "episodes", "return", "segments", "clip", "entropy");
    let outcome = train_with(&cfg, &reward, Pipeline::new(Backend::procedural()), |p| {
        let r = &p.row;
        println!(
            "{:>7} {:>8} {:>8.2} {:>8.1} {:>7.3} {:>8.2}",
            r.step, r.episodes, r.mean_return, r.mean_segments, r.clip_fraction, r.entropy
        );
        Ok(())
    })?;

    let ck = PolicyCheckpoint { policy: outcome.policy, normalizers: outcome.normalizers, seed: cfg.seed, steps: outcome.steps };
    ck.save(&out)?;
    println!("{} policy after {} steps saved to {}", reward.label(), outcome.steps, out.display());
    Ok(())
}
