use crate::level::TileGrid;

use super::MetricError;

/// Largest supported pattern edge; a pattern's glyphs are packed into a u128.
pub const MAX_PATTERN_SIZE: usize = 4;

/// Occurrence counts of every `p x p` tile pattern in a region.
///
/// Patterns are keyed by their glyphs read row by row and packed big-endian,
/// so key order is the lexicographic order of the flattened glyph strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternDistribution {
    counts: Vec<(u128, u32)>,
    total: u64,
    pattern_size: usize,
}

impl PatternDistribution {
    /// Counts patterns over the whole grid.
    pub fn of(grid: &TileGrid, p: usize) -> Result<Self, MetricError> {
        Self::of_columns(grid, 0, grid.width(), p)
    }

    /// Counts patterns in the column window `[start, start + width)`, all rows,
    /// stride 1, no wrap-around.
    pub fn of_columns(
        grid: &TileGrid,
        start: usize,
        width: usize,
        p: usize,
    ) -> Result<Self, MetricError> {
        if p == 0 || p > MAX_PATTERN_SIZE {
            return Err(MetricError::PatternSize(p));
        }
        let h = grid.height();
        if start + width > grid.width() {
            return Err(MetricError::OutOfBounds { start, width, grid_width: grid.width() });
        }
        if h < p || width < p {
            return Err(MetricError::RegionTooSmall { height: h, width, p });
        }
        let mut keys = Vec::with_capacity((h - p + 1) * (width - p + 1));
        for c in start..=start + width - p {
            for r in 0..=h - p {
                let mut key = 0u128;
                for dr in 0..p {
                    for dc in 0..p {
                        key = (key << 8) | grid.get(r + dr, c + dc).glyph_byte() as u128;
                    }
                }
                keys.push(key);
            }
        }
        keys.sort_unstable();
        let total = keys.len() as u64;
        let mut counts: Vec<(u128, u32)> = Vec::new();
        for key in keys {
            match counts.last_mut() {
                Some((k, n)) if *k == key => *n += 1,
                _ => counts.push((key, 1)),
            }
        }
        Ok(Self { counts, total, pattern_size: p })
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn pattern_size(&self) -> usize {
        self.pattern_size
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// `(flattened glyph string, count)` pairs in key order.
    pub fn patterns(&self) -> impl Iterator<Item = (String, u32)> + '_ {
        let n = self.pattern_size * self.pattern_size;
        self.counts.iter().map(move |&(key, count)| {
            let s = (0..n)
                .rev()
                .map(|i| ((key >> (8 * i)) & 0xff) as u8 as char)
                .collect();
            (s, count)
        })
    }

    pub fn count(&self, pattern: &str) -> u32 {
        self.patterns().find(|(p, _)| p == pattern).map_or(0, |(_, c)| c)
    }
}

/// Tile-pattern KL divergence `KL(a || b)` in nats.
///
/// Both distributions are smoothed over their union support `U`:
/// `p(x) = (count(x) + eps) / (total + eps * |U|)`.
pub fn kl_divergence(
    a: &PatternDistribution,
    b: &PatternDistribution,
    epsilon: f64,
) -> Result<f64, MetricError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::EmptyDistribution);
    }
    if a.pattern_size != b.pattern_size {
        return Err(MetricError::PatternSizeMismatch(a.pattern_size, b.pattern_size));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(MetricError::Config(format!("epsilon must be positive, got {epsilon}")));
    }

    // Walk the sorted supports once to size the union, then again to sum.
    let union = merge(&a.counts, &b.counts).count() as f64;
    let za = a.total as f64 + epsilon * union;
    let zb = b.total as f64 + epsilon * union;
    let mut kl = 0.0;
    for (ca, cb) in merge(&a.counts, &b.counts) {
        let pa = (ca as f64 + epsilon) / za;
        let pb = (cb as f64 + epsilon) / zb;
        kl += pa * (pa / pb).ln();
    }
    // Rounding can leave a tiny negative value for identical inputs.
    Ok(kl.max(0.0))
}

/// Paired counts over the union of two sorted supports.
fn merge<'a>(
    a: &'a [(u128, u32)],
    b: &'a [(u128, u32)],
) -> impl Iterator<Item = (u32, u32)> + 'a {
    let (mut i, mut j) = (0, 0);
    std::iter::from_fn(move || match (a.get(i), b.get(j)) {
        (Some(&(ka, ca)), Some(&(kb, cb))) => Some(if ka == kb {
            i += 1;
            j += 1;
            (ca, cb)
        } else if ka < kb {
            i += 1;
            (ca, 0)
        } else {
            j += 1;
            (0, cb)
        }),
        (Some(&(_, ca)), None) => {
            i += 1;
            Some((ca, 0))
        }
        (None, Some(&(_, cb))) => {
            j += 1;
            Some((0, cb))
        }
        (None, None) => None,
    })
}
