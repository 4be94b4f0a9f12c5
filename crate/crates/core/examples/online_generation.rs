//! Generates a 100-segment level online, resampling any latent whose
//! segment cannot be played.
//!
//!     cargo run --release --example online_generation -- [policy.bin]
//!
//! Without a checkpoint the random designer picks the latents.

use edrl::designer::{ActMode, Pipeline, PolicyCheckpoint};
use edrl::generator::Backend;
use edrl::online::{generate_online, Agent, OnlineConfig, ResampleMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ck = std::env::args().nth(1).map(|p| PolicyCheckpoint::load(p.as_ref())).transpose()?;
    let agent = match &ck {
        Some(ck) => Agent::Trained { policy: &ck.policy, mode: ActMode::Stochastic },
        None => Agent::Random,
    };
    let pipeline = Pipeline::new(Backend::procedural());
    let cfg = OnlineConfig { resample_mode: ResampleMode::Random, ..Default::default() };

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let init = pipeline.initial_state(&mut rng)?;
    let (level, report) = generate_online(&agent, &pipeline, init, &cfg, &mut rng)?;

    print!("{}", report.summary());
    let first: Vec<String> = level.serialize().lines().map(|l| l.chars().take(84).collect()).collect();
    println!("\nfirst six segments of {}:\n{}", level.segment_count(), first.join("\n"));
    Ok(())
}
