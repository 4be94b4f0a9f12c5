//! Renders a generated level as text and as a PNG.
//!
//!     cargo run --example render -- [out.png]

use std::path::PathBuf;

use edrl::designer::Pipeline;
use edrl::generator::Backend;
use edrl::online::{generate_online, Agent, OnlineConfig};
use edrl::render::{render_ascii, save_image};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("edrl_level.png"));
    let pipeline = Pipeline::new(Backend::procedural());
    let cfg = OnlineConfig { target_segments: 7, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let init = pipeline.initial_state(&mut rng)?;
    let (level, _) = generate_online(&Agent::Random, &pipeline, init, &cfg, &mut rng)?;

    print!("{}", render_ascii(&level));
    save_image(&level, 16, &out)?;
    println!("{}x{} tiles written to {}", level.width(), level.height(), out.display());
    Ok(())
}
