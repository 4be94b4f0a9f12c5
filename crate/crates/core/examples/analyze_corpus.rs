//! Diversity statistics of a level corpus at several slicing strides.
//!
//!     cargo run --example analyze_corpus [corpus_dir]

use std::path::PathBuf;

use edrl::level::{census, load_corpus, slice_segments, ElementCensus, TileAlphabet};
use edrl::metrics::{corpus_diversity_stats, MetricConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/corpus"));
    let corpus = load_corpus(&dir, &TileAlphabet::vglc())?;
    println!("{} levels from {}", corpus.len(), dir.display());

    let cfg = MetricConfig::default();
    for stride in [1, 7, 14] {
        for s in corpus_diversity_stats(&corpus, stride, &cfg)? {
            println!("stride {:>2}  {:<12} n={:<4} D = {:.3} ± {:.3}", s.stride, s.kind, s.count, s.mean, s.std);
        }
    }

    let mut totals = ElementCensus::default();
    let mut segments = 0;
    for level in &corpus {
        for seg in slice_segments(level.level.grid(), 14, 14)? {
            totals.add(&census(&seg));
            segments += 1;
        }
    }
    println!("\nelements per 14-column segment:");
    for (name, n) in ElementCensus::FIELDS.iter().zip(totals.as_array()) {
        println!("  {name:<15} {:.2}", n as f64 / segments as f64);
    }
    Ok(())
}
