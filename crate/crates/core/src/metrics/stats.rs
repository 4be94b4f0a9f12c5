use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::{diversity, MetricConfig, MetricError};
use crate::level::CorpusLevel;

/// Diversity summary for one level type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiversityStats {
    #[serde(rename = "type")]
    pub kind: String,
    pub stride: usize,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

/// Diversity of every sliced segment position in the corpus, grouped by type
/// tag, plus a `total` row over all types. Standard deviations are population
/// deviations.
pub fn corpus_diversity_stats(
    corpus: &[CorpusLevel],
    stride: usize,
    cfg: &MetricConfig,
) -> Result<Vec<DiversityStats>, MetricError> {
    if corpus.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    if stride == 0 {
        return Err(MetricError::Config("stride must be >= 1".into()));
    }
    let mut by_kind: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for entry in corpus {
        let grid = entry.level.grid();
        let values = by_kind.entry(entry.kind.as_str()).or_default();
        if grid.width() < cfg.window_width {
            continue;
        }
        let mut offset = 0;
        while offset + cfg.window_width <= grid.width() {
            values.push(diversity(grid, offset, cfg)?);
            offset += stride;
        }
    }
    let mut out: Vec<DiversityStats> = by_kind
        .iter()
        .map(|(kind, values)| summarize(kind, stride, values))
        .collect();
    let all: Vec<f64> = by_kind.values().flatten().copied().collect();
    out.push(summarize("total", stride, &all));
    Ok(out)
}

fn summarize(kind: &str, stride: usize, values: &[f64]) -> DiversityStats {
    let n = values.len();
    let (mean, std) = if n == 0 {
        (0.0, 0.0)
    } else {
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        (mean, var.sqrt())
    };
    DiversityStats { kind: kind.to_string(), stride, count: n, mean, std }
}

/// CSV with header `type,stride,count,mean,std`.
pub fn write_stats_csv<W: Write>(out: W, stats: &[DiversityStats]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in stats {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}
