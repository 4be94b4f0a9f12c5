//! Builds a segment-pool backend from the sample corpus, saves it, and
//! shows that nearby latents map to the same pool entry.
//!
//!     cargo run --example build_pool

use std::path::PathBuf;

use edrl::generator::{Backend, LatentVector, Repairer, SegmentPool};
use edrl::level::{load_corpus, Level, TileAlphabet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alphabet = TileAlphabet::vglc();
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/corpus");
    let levels: Vec<Level> = load_corpus(&dir, &alphabet)?.into_iter().map(|c| c.level).collect();

    let pool = SegmentPool::build(&levels, 14, 7, 42, &Repairer::new(alphabet))?;
    println!("{} segments from {} levels", pool.len(), pool.source().levels);

    let path = std::env::temp_dir().join("edrl_pool.bin");
    pool.write_to(std::fs::File::create(&path)?)?;
    let backend = Backend::load_pool(&path)?;
    println!("saved to {}", path.display());

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let z = LatentVector::uniform(&mut rng);
    let nudged = z.clone().with(0, z.values()[0] + 0.01);
    println!("entry for z: {}, for a nudged z: {}", pool.nearest(&z), pool.nearest(&nudged));
    println!("\n{}", backend.generate(&z).to_text());
    Ok(())
}
