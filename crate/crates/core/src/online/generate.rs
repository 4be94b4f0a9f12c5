use std::io::Write;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use super::{Agent, OnlineConfig};
use crate::designer::{DesignerError, EnvState, Pipeline};
use crate::level::{ElementCensus, Level};

/// Metrics of one segment emitted by the online loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentRecord {
    pub index: usize,
    pub resamples: usize,
    pub diversity: f64,
    pub fun: f64,
    pub deviation: f64,
    pub time_ms: f64,
    #[serde(skip)]
    pub census: ElementCensus,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GenerationReport {
    /// Some segment exhausted the resample cap.
    pub failed: bool,
    /// Samples that decoded to unplayable segments.
    pub unplayable_segments: usize,
    pub resamples_max: usize,
    pub resamples_total: usize,
    /// Every generated sample, playable or not.
    pub samples: usize,
    pub time_per_segment_ms: f64,
    pub time_per_sample_ms: f64,
    pub faulty_tiles_before: usize,
    pub faulty_tiles_after: usize,
    /// Segments over the configured time budget.
    pub over_budget: usize,
    pub segments: Vec<SegmentRecord>,
    pub census_totals: ElementCensus,
}

impl GenerationReport {
    pub fn write_segments_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["index", "resamples", "diversity", "fun", "deviation", "time_ms"];
        header.extend(ElementCensus::FIELDS);
        w.write_record(&header)?;
        for s in &self.segments {
            let mut rec = vec![
                s.index.to_string(),
                s.resamples.to_string(),
                s.diversity.to_string(),
                s.fun.to_string(),
                s.deviation.to_string(),
                format!("{:.3}", s.time_ms),
            ];
            rec.extend(s.census.as_array().iter().map(|c| c.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let line = |s: &mut String, k: &str, v: String| s.push_str(&format!("{k:<22}{v}\n"));
        line(&mut s, "segments", self.segments.len().to_string());
        line(&mut s, "failed", self.failed.to_string());
        line(&mut s, "unplayable samples", self.unplayable_segments.to_string());
        line(&mut s, "resamples (max/total)", format!("{}/{}", self.resamples_max, self.resamples_total));
        line(&mut s, "faulty tiles", format!("{} -> {}", self.faulty_tiles_before, self.faulty_tiles_after));
        line(&mut s, "ms per segment", format!("{:.3}", self.time_per_segment_ms));
        line(&mut s, "ms per sample", format!("{:.3}", self.time_per_sample_ms));
        s
    }
}

/// Extends `init` one segment at a time: act, generate, repair and
/// play-test, resampling an unplayable segment up to the configured cap.
/// Only playable segments are appended. Stops at the target length or when
/// a segment exhausts its resamples.
pub fn generate_online<R: Rng + ?Sized>(
    agent: &Agent<'_>,
    pipeline: &Pipeline,
    init: EnvState,
    cfg: &OnlineConfig,
    rng: &mut R,
) -> Result<(Level, GenerationReport), DesignerError> {
    let mut state = init;
    let mut report = GenerationReport::default();
    let started = Instant::now();
    while state.segments_done < cfg.target_segments {
        let seg_start = Instant::now();
        let mut z = agent.act(&state.current_latent, rng)?;
        let mut resamples = 0;
        let accepted = loop {
            let cand = pipeline.propose(Some(&state), &z)?;
            report.samples += 1;
            report.faulty_tiles_before += cand.faulty_before;
            report.faulty_tiles_after += cand.faulty_after;
            if cand.play.playable {
                break Some(cand);
            }
            report.unplayable_segments += 1;
            if resamples == cfg.resample_cap {
                break None;
            }
            resamples += 1;
            z = agent.resample(&state.current_latent, cfg.resample_mode, rng)?;
        };
        report.resamples_total += resamples;
        report.resamples_max = report.resamples_max.max(resamples);
        let Some(cand) = accepted else {
            report.failed = true;
            break;
        };
        let m = pipeline.measure(&state, &cand.segment)?;
        state.push(cand, pipeline.metrics.pattern_size);
        let time_ms = seg_start.elapsed().as_secs_f64() * 1e3;
        if cfg.time_budget_ms.is_some_and(|b| time_ms > b) {
            report.over_budget += 1;
        }
        report.census_totals.add(&m.census);
        report.segments.push(SegmentRecord {
            index: state.segments_done,
            resamples,
            diversity: m.diversity,
            fun: m.fun,
            deviation: m.deviation,
            time_ms,
            census: m.census,
        });
    }
    let total_ms = started.elapsed().as_secs_f64() * 1e3;
    report.time_per_segment_ms = total_ms / report.segments.len().max(1) as f64;
    report.time_per_sample_ms = total_ms / report.samples.max(1) as f64;
    Ok((state.level, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyStats {
    pub segments: usize,
    pub samples: usize,
    pub mean_segment_ms: f64,
    pub p99_segment_ms: f64,
    pub mean_sample_ms: f64,
    pub p99_sample_ms: f64,
    /// Runs that hit the resample cap; their timings are excluded.
    pub failed_runs: usize,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Wall-clock time per emitted segment and per sample over at least
/// `n_segments` segments, after one warm-up run.
pub fn benchmark_latency<R: Rng + ?Sized>(
    agent: &Agent<'_>,
    pipeline: &Pipeline,
    n_segments: usize,
    cfg: &OnlineConfig,
    rng: &mut R,
) -> Result<LatencyStats, DesignerError> {
    let warm = OnlineConfig { target_segments: cfg.target_segments.min(10), ..cfg.clone() };
    generate_online(agent, pipeline, pipeline.initial_state(rng)?, &warm, rng)?;
    let mut segment_ms = Vec::new();
    let mut sample_ms = Vec::new();
    let mut failed_runs = 0;
    while segment_ms.len() < n_segments {
        let (_, report) = generate_online(agent, pipeline, pipeline.initial_state(rng)?, cfg, rng)?;
        if report.failed {
            failed_runs += 1;
            if failed_runs > 10 * n_segments.max(1) {
                break;
            }
            continue;
        }
        for s in &report.segments {
            segment_ms.push(s.time_ms);
            // per-sample time of a segment: its time split over its attempts
            let per = s.time_ms / (s.resamples + 1) as f64;
            sample_ms.extend(std::iter::repeat_n(per, s.resamples + 1));
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    segment_ms.sort_by(f64::total_cmp);
    sample_ms.sort_by(f64::total_cmp);
    Ok(LatencyStats {
        segments: segment_ms.len(),
        samples: sample_ms.len(),
        mean_segment_ms: mean(&segment_ms),
        p99_segment_ms: percentile(&segment_ms, 0.99),
        mean_sample_ms: mean(&sample_ms),
        p99_sample_ms: percentile(&sample_ms, 0.99),
        failed_runs,
    })
}
