//! Diversity, fun and historical deviation on a hand-built level.
//!
//!     cargo run --example metrics

use edrl::level::{Level, Segment, TileAlphabet};
use edrl::metrics::{diversity, fun, historical_deviation, in_band, kl_divergence, MetricConfig, PatternDistribution};

fn flat_with(blocks: &[(usize, usize)]) -> Segment {
    let mut rows: Vec<Vec<char>> = (0..14).map(|r| vec![if r >= 12 { 'X' } else { '-' }; 14]).collect();
    for &(r, c) in blocks {
        rows[r][c] = '?';
    }
    let text: Vec<String> = rows.into_iter().map(String::from_iter).collect();
    Segment::parse(&text.join("\n"), &TileAlphabet::vglc()).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = MetricConfig::default();
    let segments = [
        flat_with(&[]),
        flat_with(&[(8, 3), (8, 4)]),
        flat_with(&[(8, 3), (8, 4)]),
        flat_with(&[(5, 1), (8, 6), (8, 7), (8, 8), (4, 12)]),
    ];
    let mut level = Level::empty(14, 14);
    for (i, seg) in segments.iter().enumerate() {
        level.concat(seg)?;
        let d = diversity(level.grid(), i * 14, &cfg)?;
        let h = historical_deviation(seg, &segments[..i], &cfg)?;
        println!(
            "segment {i}: D = {d:.3}  F = {:+.4}  in band: {:<5}  H = {h:.3}",
            fun(d, &cfg),
            in_band(d, &cfg)
        );
    }

    let a = PatternDistribution::of(segments[0].grid(), 2)?;
    let b = PatternDistribution::of(segments[3].grid(), 2)?;
    println!(
        "\nKL(first || last) = {:.4} nats over {} and {} distinct 2x2 patterns",
        kl_divergence(&a, &b, cfg.epsilon)?,
        a.distinct(),
        b.distinct()
    );
    Ok(())
}
