//! Play-tests procedural segments with the tick-model agent and prints the
//! path through a playable one.
//!
//!     cargo run --example playtest

use edrl::designer::Pipeline;
use edrl::generator::{Backend, LatentVector};
use edrl::player::{find_path, format_trace, spawn_state};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // generation, repair and play-testing in one call
    let pipeline = Pipeline::new(Backend::procedural());
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let mut playable = 0;
    let mut shown = false;
    for _ in 0..200 {
        let cand = pipeline.propose(None, &LatentVector::uniform(&mut rng))?;
        let (seg, play) = (cand.segment, cand.play);
        if !play.playable {
            continue;
        }
        playable += 1;
        if !shown {
            shown = true;
            println!("{}", seg.to_text());
            let start = spawn_state(seg.grid(), 0)?;
            let path = find_path(seg.grid(), start, &pipeline.playtester.physics)?.expect("segment is playable");
            println!("{} states visited; path of {} ticks:", play.visited_states, path.len() - 1);
            print!("{}", format_trace(&path));
        }
    }
    println!("\n{playable}/200 random procedural segments are playable on their own");
    Ok(())
}
