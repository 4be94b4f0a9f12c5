//! Detects and repairs broken pipes and cannons.
//!
//!     cargo run --example repair

use edrl::generator::{detect_faulty_tiles, Repairer};
use edrl::level::{Segment, TileAlphabet};

const BROKEN: &str = "\
--------------
--------------
--------------
--------------
--------------
--------------
--------------
-----<--------
----------B---
------------[-
--]-----------
--------------
XXXXXXX--XXXXX
XXXXXXX--XXXXX";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alphabet = TileAlphabet::vglc();
    let segment = Segment::parse(BROKEN, &alphabet)?;
    println!("before:\n{}", segment.to_text());
    for t in detect_faulty_tiles(&segment) {
        println!("  faulty {:?} at row {}, column {}", t.glyph, t.row, t.col);
    }

    let repaired = Repairer::new(alphabet).repair(&segment);
    println!("\nafter:\n{}", repaired.to_text());
    println!("faulty tiles left: {}", detect_faulty_tiles(&repaired).len());
    Ok(())
}
