//! Tile-pattern KL divergence and the reward metrics built on it: diversity,
//! fun (diversity moderated into a band) and historical deviation.

mod pattern;
mod stats;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::level::{Segment, TileGrid};

pub use pattern::{kl_divergence, PatternDistribution, MAX_PATTERN_SIZE};
pub use stats::{corpus_diversity_stats, write_stats_csv, DiversityStats};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("pattern size {0} unsupported (1..={MAX_PATTERN_SIZE})", MAX_PATTERN_SIZE = pattern::MAX_PATTERN_SIZE)]
    PatternSize(usize),
    #[error("region {height}x{width} is smaller than the {p}x{p} pattern")]
    RegionTooSmall { height: usize, width: usize, p: usize },
    #[error("window of width {width} at column {start} exceeds grid width {grid_width}")]
    OutOfBounds { start: usize, width: usize, grid_width: usize },
    #[error("empty pattern distribution")]
    EmptyDistribution,
    #[error("pattern size mismatch: {0} vs {1}")]
    PatternSizeMismatch(usize, usize),
    #[error("invalid metric config: {0}")]
    Config(String),
    #[error("empty corpus")]
    EmptyCorpus,
}

/// Reward-metric hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    /// Edge of the square tile pattern.
    pub pattern_size: usize,
    /// Additive smoothing for pattern counts.
    pub epsilon: f64,
    pub window_width: usize,
    pub window_height: usize,
    /// How many times the diversity window steps back from the segment.
    pub history_windows: usize,
    /// Columns per backward step of the diversity window.
    pub window_stride: usize,
    /// Lower edge of the moderate-diversity band.
    pub lower_bound: f64,
    /// Upper edge of the moderate-diversity band.
    pub upper_bound: f64,
    /// Previous segments remembered for historical deviation.
    pub memory: usize,
    /// Nearest remembered segments averaged for historical deviation.
    pub nearest: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            pattern_size: 2,
            epsilon: 0.001,
            window_width: 14,
            window_height: 14,
            history_windows: 3,
            window_stride: 7,
            lower_bound: 0.26,
            upper_bound: 0.94,
            memory: 20,
            nearest: 10,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<(), MetricError> {
        let fail = |m: &str| Err(MetricError::Config(m.to_string()));
        if self.pattern_size == 0 || self.pattern_size > MAX_PATTERN_SIZE {
            return Err(MetricError::PatternSize(self.pattern_size));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return fail("epsilon must be positive");
        }
        if self.window_width < self.pattern_size || self.window_height < self.pattern_size {
            return fail("window smaller than pattern");
        }
        if self.window_stride == 0 {
            return fail("window_stride must be >= 1");
        }
        if !(0.0 < self.lower_bound && self.lower_bound < self.upper_bound) {
            return fail("need 0 < lower_bound < upper_bound");
        }
        if self.nearest == 0 || self.nearest > self.memory {
            return fail("need 1 <= nearest <= memory");
        }
        Ok(())
    }
}

/// Diversity of the segment occupying columns `[seg_start, seg_start + w)`:
/// the mean KL divergence between it and the windows at
/// `seg_start - i * stride` for `i = 0..=n'`, where `n'` counts only the
/// backward steps that stay inside the grid. The `i = 0` term is zero and is
/// part of the average.
pub fn diversity(grid: &TileGrid, seg_start: usize, cfg: &MetricConfig) -> Result<f64, MetricError> {
    let w = cfg.window_width;
    if seg_start + w > grid.width() {
        return Err(MetricError::OutOfBounds { start: seg_start, width: w, grid_width: grid.width() });
    }
    let steps = cfg.history_windows.min(seg_start / cfg.window_stride);
    let current = PatternDistribution::of_columns(grid, seg_start, w, cfg.pattern_size)?;
    let mut sum = 0.0;
    for i in 1..=steps {
        let window = PatternDistribution::of_columns(
            grid,
            seg_start - i * cfg.window_stride,
            w,
            cfg.pattern_size,
        )?;
        sum += kl_divergence(&current, &window, cfg.epsilon)?;
    }
    Ok(sum / (steps + 1) as f64)
}

/// Fun: zero inside `[lower, upper]`, otherwise minus the squared distance
/// to the nearest bound.
pub fn fun(diversity: f64, cfg: &MetricConfig) -> f64 {
    if diversity > cfg.upper_bound {
        -(diversity - cfg.upper_bound).powi(2)
    } else if diversity < cfg.lower_bound {
        -(diversity - cfg.lower_bound).powi(2)
    } else {
        0.0
    }
}

pub fn in_band(diversity: f64, cfg: &MetricConfig) -> bool {
    (cfg.lower_bound..=cfg.upper_bound).contains(&diversity)
}

/// Historical deviation of `segment` against `history` (oldest first).
pub fn historical_deviation(
    segment: &Segment,
    history: &[Segment],
    cfg: &MetricConfig,
) -> Result<f64, MetricError> {
    let current = PatternDistribution::of(segment.grid(), cfg.pattern_size)?;
    let recent = &history[history.len().saturating_sub(cfg.memory)..];
    let dists = recent
        .iter()
        .map(|s| PatternDistribution::of(s.grid(), cfg.pattern_size))
        .collect::<Result<Vec<_>, _>>()?;
    historical_deviation_of(&current, &dists, cfg)
}

/// Historical deviation over precomputed distributions (oldest first): the
/// mean of the `k' = min(k, m')` smallest divergences to the most recent
/// `m' = min(m, len)` entries. Zero for an empty history.
pub fn historical_deviation_of(
    current: &PatternDistribution,
    history: &[PatternDistribution],
    cfg: &MetricConfig,
) -> Result<f64, MetricError> {
    let recent = &history[history.len().saturating_sub(cfg.memory)..];
    if recent.is_empty() {
        return Ok(0.0);
    }
    let mut kls = recent
        .iter()
        .map(|d| kl_divergence(current, d, cfg.epsilon))
        .collect::<Result<Vec<_>, _>>()?;
    kls.sort_by(f64::total_cmp);
    let k = cfg.nearest.min(kls.len());
    Ok(kls[..k].iter().sum::<f64>() / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level::{Level, TileAlphabet};

    fn seg_with_bottom(bottom: &str, fill_row: Option<(usize, &str)>) -> Segment {
        let mut rows = vec!["--------------".to_string(); 14];
        rows[13] = bottom.to_string();
        if let Some((r, s)) = fill_row {
            rows[r] = s.to_string();
        }
        Segment::parse(&rows.join("\n"), &TileAlphabet::vglc()).unwrap()
    }

    #[test]
    fn fun_values() {
        let cfg = MetricConfig::default();
        assert_eq!(fun(0.5, &cfg), 0.0);
        assert!((fun(1.0, &cfg) + 0.0036).abs() < 1e-12);
        assert!((fun(0.1, &cfg) + 0.0256).abs() < 1e-12);
        assert_eq!(fun(0.26, &cfg), 0.0);
        assert_eq!(fun(0.94, &cfg), 0.0);
    }

    #[test]
    fn repeated_segments_have_zero_diversity() {
        let cfg = MetricConfig::default();
        let s = seg_with_bottom("XXXX--XXXXXXXX", Some((10, "---?---E--o---")));
        let mut level = Level::empty(14, 14);
        for _ in 0..5 {
            level.concat(&s).unwrap();
        }
        // Shifted windows of a periodic level are not identical to S, but
        // seg_start = 0 and whole-period offsets are.
        assert_eq!(diversity(level.grid(), 0, &cfg).unwrap(), 0.0);
        let uniform = seg_with_bottom("XXXXXXXXXXXXXX", None);
        let mut flat = Level::empty(14, 14);
        for _ in 0..5 {
            flat.concat(&uniform).unwrap();
        }
        for i in 0..5 {
            assert_eq!(diversity(flat.grid(), i * 14, &cfg).unwrap(), 0.0);
        }
        assert!(diversity(flat.grid(), 60, &cfg).is_err());
    }

    #[test]
    fn deviation_short_history() {
        let cfg = MetricConfig::default();
        let s = seg_with_bottom("XXXXXXXXXXXXXX", None);
        assert_eq!(historical_deviation(&s, &[], &cfg).unwrap(), 0.0);
        assert_eq!(historical_deviation(&s, &[s.clone()], &cfg).unwrap(), 0.0);
        let other = seg_with_bottom("XX----XXXXXXXX", None);
        let h = historical_deviation(&s, &[other.clone(), s.clone()], &cfg).unwrap();
        let d = PatternDistribution::of(s.grid(), 2).unwrap();
        let o = PatternDistribution::of(other.grid(), 2).unwrap();
        let expected = kl_divergence(&d, &o, 1e-3).unwrap() / 2.0;
        assert!((h - expected).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(MetricConfig::default().validate().is_ok());
        let bad = MetricConfig { lower_bound: 0.9, upper_bound: 0.2, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = MetricConfig { nearest: 30, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = MetricConfig { window_stride: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
