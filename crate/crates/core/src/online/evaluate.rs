use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Agent;
use crate::designer::{DesignerError, EnvState, Pipeline};
use crate::level::ElementCensus;
use crate::metrics::{in_band, MetricConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub initial_segments: usize,
    pub trials_per_init: usize,
    pub max_segments: usize,
    /// Filled from the run seed; not part of the config file.
    #[serde(skip)]
    pub seed: u64,
    /// Spread levels over the rayon pool. Results do not depend on it.
    pub parallel: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { initial_segments: 30, trials_per_init: 10, max_segments: 100, seed: 0, parallel: true }
    }
}

/// Raw per-segment values of one evaluated level. Metric vectors cover
/// playable segments only.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRow {
    pub init: usize,
    pub trial: usize,
    /// Designed segments completed before the first unplayable one.
    pub playable_segments: usize,
    pub generated: usize,
    pub diversity: Vec<f64>,
    pub fun: Vec<f64>,
    pub deviation: Vec<f64>,
    pub census: Vec<ElementCensus>,
}

impl LevelRow {
    fn mean(v: &[f64]) -> f64 {
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    }

    pub fn fun_mean(&self) -> f64 {
        Self::mean(&self.fun)
    }

    pub fn deviation_mean(&self) -> f64 {
        Self::mean(&self.deviation)
    }

    /// Percent of playable segments whose diversity lies in the band.
    pub fn band_percent(&self, cfg: &MetricConfig) -> f64 {
        let inside = self.diversity.iter().filter(|&&d| in_band(d, cfg)).count();
        if self.diversity.is_empty() {
            f64::NAN
        } else {
            100.0 * inside as f64 / self.diversity.len() as f64
        }
    }
}

/// Aggregates over all levels. Means pool playable segments across
/// levels; `*_std` fields are the spread of the per-level means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub levels: usize,
    pub fun_mean: f64,
    pub fun_std: f64,
    pub band_percent: f64,
    pub band_std: f64,
    pub deviation_mean: f64,
    pub deviation_std: f64,
    pub playable_mean: f64,
    pub playable_std: f64,
    /// Element counts per playable segment, in `ElementCensus::FIELDS` order.
    pub census_means: [f64; 6],
}

fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (mean, (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt())
}

impl Summary {
    pub fn from_rows(rows: &[LevelRow], cfg: &MetricConfig) -> Self {
        let segments: usize = rows.iter().map(|r| r.diversity.len()).sum();
        let pooled = |f: &dyn Fn(&LevelRow) -> f64| {
            if segments == 0 {
                f64::NAN
            } else {
                rows.iter().map(f).sum::<f64>() / segments as f64
            }
        };
        let fun_mean = pooled(&|r| r.fun.iter().sum());
        let deviation_mean = pooled(&|r| r.deviation.iter().sum());
        let band_percent = 100.0 * pooled(&|r| r.diversity.iter().filter(|&&d| in_band(d, cfg)).count() as f64);
        let mut census_means = [0.0; 6];
        for c in rows.iter().flat_map(|r| &r.census) {
            for (m, v) in census_means.iter_mut().zip(c.as_array()) {
                *m += v as f64;
            }
        }
        census_means.iter_mut().for_each(|m| *m /= segments.max(1) as f64);
        let (playable_mean, playable_std) = mean_std(rows.iter().map(|r| r.playable_segments as f64));
        Self {
            levels: rows.len(),
            fun_mean,
            fun_std: mean_std(rows.iter().map(LevelRow::fun_mean)).1,
            band_percent,
            band_std: mean_std(rows.iter().map(|r| r.band_percent(cfg))).1,
            deviation_mean,
            deviation_std: mean_std(rows.iter().map(LevelRow::deviation_mean)).1,
            playable_mean,
            playable_std,
            census_means,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub agent: String,
    pub rows: Vec<LevelRow>,
    pub summary: Summary,
    pub metrics: MetricConfig,
}

impl EvaluationReport {
    /// The aggregates recomputed from the stored per-segment values equal
    /// the stored summary.
    pub fn is_consistent(&self) -> bool {
        let again = Summary::from_rows(&self.rows, &self.metrics);
        let same = |a: f64, b: f64| a == b || (a.is_nan() && b.is_nan());
        let s = &self.summary;
        same(again.fun_mean, s.fun_mean)
            && same(again.band_percent, s.band_percent)
            && same(again.deviation_mean, s.deviation_mean)
            && same(again.playable_mean, s.playable_mean)
            && again.census_means == s.census_means
            && again.levels == s.levels
    }

    pub fn write_rows_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "init", "trial", "playable_segments", "generated", "measured", "fun_mean", "band_percent",
            "deviation_mean",
        ];
        header.extend(ElementCensus::FIELDS);
        w.write_record(&header)?;
        for r in &self.rows {
            let mut totals = ElementCensus::default();
            r.census.iter().for_each(|c| totals.add(c));
            let mut rec = vec![
                r.init.to_string(),
                r.trial.to_string(),
                r.playable_segments.to_string(),
                r.generated.to_string(),
                r.diversity.len().to_string(),
                r.fun_mean().to_string(),
                r.band_percent(&self.metrics).to_string(),
                r.deviation_mean().to_string(),
            ];
            rec.extend(totals.as_array().iter().map(|c| c.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary_table(&self) -> String {
        let s = &self.summary;
        let mut out = format!(
            "{:<10}{:>18}{:>10}{:>18}{:>16}\n",
            "agent", "F", "F_b (%)", "H", "P"
        );
        out.push_str(&format!(
            "{:<10}{:>18}{:>10.1}{:>18}{:>16}\n",
            self.agent,
            format!("{:.4}±{:.4}", s.fun_mean, s.fun_std),
            s.band_percent,
            format!("{:.3}±{:.3}", s.deviation_mean, s.deviation_std),
            format!("{:.1}±{:.1}", s.playable_mean, s.playable_std),
        ));
        out.push_str("elements per segment:");
        for (name, m) in ElementCensus::FIELDS.iter().zip(s.census_means) {
            out.push_str(&format!(" {name}={m:.3}"));
        }
        out.push('\n');
        out
    }
}

/// The `n` initial states used for evaluation, drawn in order from `seed`.
pub fn initial_states(pipeline: &Pipeline, n: usize, seed: u64) -> Result<Vec<EnvState>, DesignerError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| pipeline.initial_state(&mut rng)).collect()
}

fn level_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 + index as u64);
    rng
}

fn run_level(
    agent: &Agent<'_>,
    pipeline: &Pipeline,
    init: &EnvState,
    max_segments: usize,
    rng: &mut ChaCha8Rng,
) -> Result<LevelRow, DesignerError> {
    let mut state = init.clone();
    let mut row = LevelRow {
        init: 0,
        trial: 0,
        playable_segments: 0,
        generated: 0,
        diversity: Vec::new(),
        fun: Vec::new(),
        deviation: Vec::new(),
        census: Vec::new(),
    };
    let mut broken = false;
    while state.segments_done < max_segments {
        let z = agent.act(&state.current_latent, rng)?;
        let cand = pipeline.propose(Some(&state), &z)?;
        row.generated += 1;
        if cand.play.playable {
            let m = pipeline.measure(&state, &cand.segment)?;
            row.diversity.push(m.diversity);
            row.fun.push(m.fun);
            row.deviation.push(m.deviation);
            row.census.push(m.census);
            if !broken {
                row.playable_segments += 1;
            }
        } else {
            broken = true;
            if agent.stops_on_unplayable() {
                break;
            }
        }
        state.push(cand, pipeline.metrics.pattern_size);
    }
    Ok(row)
}

/// Generates `trials_per_init` levels from each of `initial_segments`
/// initial states. Agents trained with playability stop a level at the
/// first unplayable segment; others always run to `max_segments`, with the
/// play-tester respawning after an unplayable segment.
pub fn evaluate_policy(
    agent: &Agent<'_>,
    pipeline: &Pipeline,
    cfg: &EvalConfig,
) -> Result<EvaluationReport, DesignerError> {
    let inits = initial_states(pipeline, cfg.initial_segments, cfg.seed)?;
    let jobs: Vec<(usize, usize)> =
        (0..cfg.initial_segments).flat_map(|i| (0..cfg.trials_per_init).map(move |t| (i, t))).collect();
    let run = |&(i, t): &(usize, usize)| {
        let mut rng = level_rng(cfg.seed, i * cfg.trials_per_init + t);
        run_level(agent, pipeline, &inits[i], cfg.max_segments, &mut rng)
            .map(|row| LevelRow { init: i, trial: t, ..row })
    };
    let rows: Vec<LevelRow> = if cfg.parallel {
        jobs.par_iter().map(run).collect::<Result<_, _>>()?
    } else {
        jobs.iter().map(run).collect::<Result<_, _>>()?
    };
    let summary = Summary::from_rows(&rows, &pipeline.metrics);
    Ok(EvaluationReport { agent: agent.label(), rows, summary, metrics: pipeline.metrics.clone() })
}
