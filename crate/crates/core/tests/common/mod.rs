//! Shared helpers for the integration tests, including a deliberately naive
//! re-implementation of the pattern metrics used as an oracle.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use edrl::level::{Level, Segment, TileAlphabet, TileGrid};
use rand::Rng;

/// Glyph rows of a grid.
pub fn rows_of(grid: &TileGrid) -> Vec<Vec<char>> {
    grid.to_text().lines().map(|l| l.chars().collect()).collect()
}

/// Counts p x p windows in columns `[c0, c0 + w)` of the first `h` rows by
/// building each window's string.
pub fn oracle_patterns(rows: &[Vec<char>], c0: usize, w: usize, h: usize, p: usize) -> HashMap<String, u64> {
    let mut counts = HashMap::new();
    for r in 0..=h - p {
        for c in c0..=c0 + w - p {
            let mut key = String::new();
            for dr in 0..p {
                for dc in 0..p {
                    key.push(rows[r + dr][c + dc]);
                }
            }
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    counts
}

/// Smoothed KL divergence by direct summation over the union support.
pub fn oracle_kl(a: &HashMap<String, u64>, b: &HashMap<String, u64>, eps: f64) -> f64 {
    let support: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    let u = support.len() as f64;
    let ta: u64 = a.values().sum();
    let tb: u64 = b.values().sum();
    let mut total = 0.0;
    for key in support {
        let pa = (*a.get(key).unwrap_or(&0) as f64 + eps) / (ta as f64 + eps * u);
        let pb = (*b.get(key).unwrap_or(&0) as f64 + eps) / (tb as f64 + eps * u);
        total += pa * (pa / pb).ln();
    }
    total
}

pub struct OracleParams {
    pub p: usize,
    pub eps: f64,
    pub w: usize,
    pub h: usize,
    pub n: usize,
    pub d: usize,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self { p: 2, eps: 0.001, w: 14, h: 14, n: 3, d: 7 }
    }
}

pub fn oracle_diversity(rows: &[Vec<char>], seg_start: usize, o: &OracleParams) -> f64 {
    let s = oracle_patterns(rows, seg_start, o.w, o.h, o.p);
    let mut terms = Vec::new();
    let mut i = 0;
    while i <= o.n && i * o.d <= seg_start {
        let window = oracle_patterns(rows, seg_start - i * o.d, o.w, o.h, o.p);
        terms.push(oracle_kl(&s, &window, o.eps));
        i += 1;
    }
    terms.iter().sum::<f64>() / terms.len() as f64
}

pub fn oracle_fun(d: f64, l: f64, u: f64) -> f64 {
    if d < l {
        -(d - l) * (d - l)
    } else if d > u {
        -(d - u) * (d - u)
    } else {
        0.0
    }
}

pub fn oracle_deviation(seg: &[Vec<char>], history: &[Vec<Vec<char>>], m: usize, k: usize, o: &OracleParams) -> f64 {
    if history.is_empty() {
        return 0.0;
    }
    let s = oracle_patterns(seg, 0, seg[0].len(), seg.len(), o.p);
    let recent = &history[history.len().saturating_sub(m)..];
    let mut kls: Vec<f64> = recent
        .iter()
        .map(|h| oracle_kl(&s, &oracle_patterns(h, 0, h[0].len(), h.len(), o.p), o.eps))
        .collect();
    kls.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let take = k.min(kls.len());
    kls[..take].iter().sum::<f64>() / take as f64
}

/// A random level of `segments` 14x14 segments over a small glyph set,
/// biased so patterns repeat often enough to be interesting.
pub fn random_level<R: Rng>(rng: &mut R, segments: usize) -> Level {
    let glyphs = ['-', '-', '-', 'X', 'S', '?', 'o', 'E'];
    let width = 14 * segments;
    let rows: Vec<String> = (0..14)
        .map(|r| {
            (0..width)
                .map(|_| {
                    if r >= 12 && rng.random_bool(0.8) {
                        'X'
                    } else {
                        glyphs[rng.random_range(0..glyphs.len())]
                    }
                })
                .collect()
        })
        .collect();
    Level::parse(&rows.join("\n"), &TileAlphabet::vglc()).unwrap()
}

/// A 14x14 segment from row strings.
pub fn segment(rows: &[String]) -> Segment {
    Segment::parse(&rows.join("\n"), &TileAlphabet::vglc()).unwrap()
}

/// A 14x14 segment with solid columns of the given heights.
pub fn columns(heights: &[usize]) -> Segment {
    let rows: Vec<String> = (0..14)
        .map(|r| heights.iter().map(|&h| if r >= 14 - h { 'X' } else { '-' }).collect())
        .collect();
    segment(&rows)
}

/// All glyphs of the default alphabet.
pub const VGLC_GLYPHS: [char; 13] = ['-', 'X', 'S', '?', 'Q', 'o', 'E', '<', '>', '[', ']', 'B', 'b'];
