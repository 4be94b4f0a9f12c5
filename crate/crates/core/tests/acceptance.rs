//! End-to-end acceptance checks. Prints one PASS/FAIL/SKIP line per
//! criterion and exits non-zero if any check fails.

mod common;

use std::path::PathBuf;
use std::time::Instant;

use common::*;
use edrl::commands::{cmd_generate, cmd_train};
use edrl::config::RunConfig;
use edrl::designer::{
    surrogate_loss_and_grad, train, ActMode, DesignerPolicy, GaussianPolicy, Mlp, Pipeline, PpoSample,
    RewardConfig, TrainConfig,
};
use edrl::generator::{detect_faulty_tiles, Backend, Repairer};
use edrl::level::{load_corpus, Level, Segment, TileAlphabet, TileGrid};
use edrl::metrics::{
    corpus_diversity_stats, diversity, fun, historical_deviation, kl_divergence, MetricConfig, PatternDistribution,
};
use edrl::online::{
    benchmark_latency, evaluate_policy, generate_online, Agent, EvalConfig, EvaluationReport, OnlineConfig,
    ResampleMode,
};
use edrl::player::{spawn_state, test_playability, PhysicsParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Verdict::*;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn oracle_equivalence() -> Verdict {
    let started = Instant::now();
    let cfg = MetricConfig::default();
    let o = OracleParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut values = 0;
    for _ in 0..50 {
        let n = rng.random_range(2..=6);
        let level = random_level(&mut rng, n);
        let rows = rows_of(level.grid());
        let segs: Vec<Segment> = level.segments().collect();
        for (i, seg) in segs.iter().enumerate() {
            let d = diversity(level.grid(), i * 14, &cfg).unwrap();
            worst = worst.max((d - oracle_diversity(&rows, i * 14, &o)).abs());
            worst = worst.max((fun(d, &cfg) - oracle_fun(d, cfg.lower_bound, cfg.upper_bound)).abs());
            let hist: Vec<_> = segs[..i].iter().map(|s| rows_of(s.grid())).collect();
            let h = historical_deviation(seg, &segs[..i], &cfg).unwrap();
            worst = worst.max((h - oracle_deviation(&rows_of(seg.grid()), &hist, cfg.memory, cfg.nearest, &o)).abs());
            for (j, other) in segs.iter().enumerate() {
                let kl = kl_divergence(
                    &PatternDistribution::of(seg.grid(), 2).unwrap(),
                    &PatternDistribution::of(other.grid(), 2).unwrap(),
                    cfg.epsilon,
                )
                .unwrap();
                let want = oracle_kl(&oracle_patterns(&rows, i * 14, 14, 14, 2), &oracle_patterns(&rows, j * 14, 14, 14, 2), cfg.epsilon);
                worst = worst.max((kl - want).abs());
                values += 1;
            }
            values += 3;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    check(worst < 1e-9 && secs < 10.0, format!("{values} values, max abs error {worst:.2e}, {secs:.2} s"))
}

fn kl_hand_value() -> Verdict {
    let a = TileAlphabet::vglc();
    let empty = TileGrid::filled(14, 14, a.tile('-').unwrap());
    let solid = TileGrid::filled(14, 14, a.tile('X').unwrap());
    let kl = kl_divergence(
        &PatternDistribution::of(&empty, 2).unwrap(),
        &PatternDistribution::of(&solid, 2).unwrap(),
        0.001,
    )
    .unwrap();
    check((kl - 12.04).abs() <= 0.01, format!("KL = {kl:.4} nats"))
}

fn fun_band() -> Verdict {
    let cfg = MetricConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bad = 0;
    for _ in 0..10_000 {
        let d: f64 = rng.random_range(0.0..2.0);
        let f = fun(d, &cfg);
        let inside = (cfg.lower_bound..=cfg.upper_bound).contains(&d);
        if (f == 0.0) != inside || f != oracle_fun(d, cfg.lower_bound, cfg.upper_bound) {
            bad += 1;
        }
    }
    let edge = fun(cfg.lower_bound, &cfg).abs().max(fun(cfg.upper_bound, &cfg).abs());
    check(bad == 0 && edge < 1e-12, format!("{bad} mismatches in 10^4 draws, |F| at bounds {edge:.1e}"))
}

fn corpus_statistics() -> Verdict {
    let Some(dir) = std::env::var_os("EDRL_VGLC_DIR").map(PathBuf::from) else {
        return Skip("EDRL_VGLC_DIR not set; oracle equivalence stands in".into());
    };
    let corpus = match load_corpus(&dir, &TileAlphabet::vglc()) {
        Ok(c) => c,
        Err(e) => return Fail(format!("cannot load {}: {e}", dir.display())),
    };
    let cfg = MetricConfig::default();
    let mut notes = Vec::new();
    let mut ok = false;
    for stride in [1, 7, 14] {
        let stats = corpus_diversity_stats(&corpus, stride, &cfg).unwrap();
        let mean = |kind: &str| stats.iter().find(|s| s.kind == kind).map(|s| s.mean);
        let (ow, ug) = (mean("overworld"), mean("underground"));
        if let (Some(ow), Some(ug)) = (ow, ug) {
            ok |= (ow - 0.60).abs() <= 0.08 && (ug - 1.11).abs() <= 0.15;
            notes.push(format!("stride {stride}: overworld {ow:.3}, underground {ug:.3}"));
        }
    }
    check(ok, notes.join("; "))
}

fn repairer_fuzz() -> Verdict {
    let started = Instant::now();
    let rep = Repairer::new(TileAlphabet::vglc());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // structural glyphs are overweighted so most segments need repair
    let glyphs = ['-', '-', '-', 'X', '<', '>', '[', ']', 'B', 'b', 'E', '?'];
    let (mut dirty, mut not_idem, mut needed) = (0, 0, 0);
    for _ in 0..10_000 {
        let rows: Vec<String> =
            (0..14).map(|_| (0..14).map(|_| glyphs[rng.random_range(0..glyphs.len())]).collect()).collect();
        let s = segment(&rows);
        if !detect_faulty_tiles(&s).is_empty() {
            needed += 1;
        }
        let once = rep.repair(&s);
        dirty += usize::from(!detect_faulty_tiles(&once).is_empty());
        not_idem += usize::from(rep.repair(&once) != once);
    }
    let secs = started.elapsed().as_secs_f64();
    check(
        dirty == 0 && not_idem == 0 && secs < 5.0,
        format!("{needed} of 10^4 needed repair; {dirty} still faulty, {not_idem} not idempotent; {secs:.2} s"),
    )
}

fn playability_fixtures() -> Verdict {
    let phys = PhysicsParams::default();
    let grid = |heights: &[usize]| columns(heights).into_grid();
    let strip = |heights: Vec<usize>| {
        let rows: Vec<String> = (0..14)
            .map(|r| heights.iter().map(|&h| if h > 0 && r >= 14 - h { 'X' } else { '-' }).collect())
            .collect();
        TileGrid::parse(&rows.join("\n"), &TileAlphabet::vglc()).unwrap()
    };
    let mut gap = vec![2; 8];
    gap.extend([0; 12]);
    gap.extend([2; 8]);
    let cases = [
        ("flat", grid(&[2; 14]), true),
        ("wall of rise 5", grid(&[2, 2, 2, 2, 2, 2, 7, 7, 7, 7, 7, 7, 7, 7]), false),
        ("12-wide gap", strip(gap), false),
        ("+1 staircase", grid(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 13]), true),
    ];
    let mut wrong = Vec::new();
    for (name, g, want) in &cases {
        let start = spawn_state(g, 0).unwrap();
        if test_playability(g, start, &phys).unwrap().playable != *want {
            wrong.push(*name);
        }
    }
    check(wrong.is_empty(), if wrong.is_empty() { "4 fixtures as expected".into() } else { format!("wrong: {wrong:?}") })
}

fn ppo_gradient_check() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut policy = GaussianPolicy::new(Mlp::new(&[2, 1], true, 1.0, &mut rng), 0.5f64.ln());
    let batch: Vec<PpoSample> = (0..8)
        .map(|i| {
            let state = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let mean = policy.mean.forward(&state);
            let action = vec![mean[0] + rng.random_range(-0.6..0.6)];
            let lp = GaussianPolicy::log_prob(&mean, &policy.log_std, &action);
            // small offsets keep every ratio strictly inside the clip range
            PpoSample { state, action, old_log_prob: lp + 0.03 * (i as f64 - 3.5) / 3.5, advantage: rng.random_range(-1.0..1.0) }
        })
        .collect();
    let (clip, ent) = (0.2, 0.01);
    let (_, grad, _) = surrogate_loss_and_grad(&policy, &batch, clip, ent);
    let base = policy.flat_params();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for k in 0..base.len() {
        let mut eval = |delta: f64| {
            let mut p = base.clone();
            p[k] += delta;
            policy.set_flat_params(&p);
            surrogate_loss_and_grad(&policy, &batch, clip, ent).0
        };
        let fd = (eval(h) - eval(-h)) / (2.0 * h);
        let rel = (grad[k] - fd).abs() / grad[k].abs().max(fd.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    check(worst < 1e-4, format!("{} params, max relative error {worst:.2e}", base.len()))
}

/// Training setup shared by every trained policy below.
fn desk_train_config() -> TrainConfig {
    let mut cfg = TrainConfig { total_steps: 100_000, seed: 7, ..Default::default() };
    cfg.ppo.discount = 0.9;
    cfg.ppo.learning_rate = 1e-3;
    cfg
}

struct Trained {
    f: DesignerPolicy,
    h: DesignerPolicy,
    fh: DesignerPolicy,
    fhp: DesignerPolicy,
    secs: f64,
}

fn train_all(pipeline: &Pipeline) -> Trained {
    let started = Instant::now();
    let cfg = desk_train_config();
    let run = |label: &str| train(&cfg, &RewardConfig::parse(label).unwrap(), pipeline.clone()).unwrap().policy;
    let (f, h, fh, fhp) = (run("F"), run("H"), run("FH"), run("FHP"));
    Trained { f, h, fh, fhp, secs: started.elapsed().as_secs_f64() }
}

fn band_mean_se(r: &EvaluationReport) -> (f64, f64) {
    let v: Vec<f64> = r.rows.iter().map(|x| x.band_percent(&r.metrics)).filter(|x| x.is_finite()).collect();
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn training_effectiveness(pipeline: &Pipeline, t: &Trained) -> [(&'static str, Verdict); 3] {
    let ecfg = EvalConfig { seed: 31, ..Default::default() };
    let eval = |agent: Agent| evaluate_policy(&agent, pipeline, &ecfg).unwrap();
    let trained = |p| Agent::Trained { policy: p, mode: ActMode::Stochastic };
    let random = eval(Agent::Random);
    let (f, h, fh, fhp) = (eval(trained(&t.f)), eval(trained(&t.h)), eval(trained(&t.fh)), eval(trained(&t.fhp)));
    let (rb, rs) = band_mean_se(&random);
    let (fb, fs) = band_mean_se(&f);
    let two_se = 2.0 * (rs * rs + fs * fs).sqrt();
    let timing = format!("training {:.0} s for 4 policies", t.secs);
    [
        (
            "training (a) F beats random on band share",
            check(fb - rb > two_se, format!("F {fb:.1}% vs random {rb:.1}%, gap {:.2} vs 2SE {two_se:.2}; {timing}", fb - rb)),
        ),
        (
            "training (b) FHP beats FH on playability",
            check(
                fhp.summary.playable_mean > fh.summary.playable_mean,
                format!("P FHP {:.1} vs FH {:.1}", fhp.summary.playable_mean, fh.summary.playable_mean),
            ),
        ),
        (
            "training (c) H beats F on deviation",
            check(
                h.summary.deviation_mean > f.summary.deviation_mean,
                format!("H H {:.3} vs F H {:.3}", h.summary.deviation_mean, f.summary.deviation_mean),
            ),
        ),
    ]
}

/// Replays a finished level segment by segment through the play-tester.
fn all_segments_playable(pipeline: &Pipeline, level: &Level) -> bool {
    let mut prefix = Level::empty(level.height(), level.segment_width());
    let mut end = None;
    for seg in level.segments() {
        let play = pipeline.playtester.test_segment(&prefix, end, &seg).unwrap();
        if !play.playable {
            return false;
        }
        end = play.end_state;
        prefix.concat(&seg).unwrap();
    }
    true
}

fn online_loop(pipeline: &Pipeline, policy: &DesignerPolicy) -> Verdict {
    let agent = Agent::Trained { policy, mode: ActMode::Stochastic };
    let cfg = OnlineConfig { resample_mode: ResampleMode::Random, ..Default::default() };
    let (mut complete, mut unplayable_emitted, mut max_resamples) = (0, 0, 0);
    for run in 0..300u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        rng.set_stream(run);
        let init = pipeline.initial_state(&mut rng).unwrap();
        let (level, report) = generate_online(&agent, pipeline, init, &cfg, &mut rng).unwrap();
        max_resamples = max_resamples.max(report.resamples_max);
        if !all_segments_playable(pipeline, &level) {
            unplayable_emitted += 1;
        }
        if !report.failed && level.segment_count() == cfg.target_segments + 1 {
            complete += 1;
        }
    }
    check(
        complete >= 285 && unplayable_emitted == 0 && max_resamples <= cfg.resample_cap,
        format!("{complete}/300 complete, {unplayable_emitted} levels with unplayable segments, max resamples {max_resamples}"),
    )
}

fn latency(pipeline: &Pipeline, policy: &DesignerPolicy) -> Verdict {
    let agent = Agent::Trained { policy, mode: ActMode::Stochastic };
    let cfg = OnlineConfig { resample_mode: ResampleMode::Random, ..Default::default() };
    let stats = benchmark_latency(&agent, pipeline, 3000, &cfg, &mut ChaCha8Rng::seed_from_u64(43)).unwrap();
    check(
        stats.mean_segment_ms < 100.0 && stats.p99_segment_ms < 500.0,
        format!(
            "{} segments: mean {:.2} ms, p99 {:.2} ms ({} failed runs excluded)",
            stats.segments, stats.mean_segment_ms, stats.p99_segment_ms, stats.failed_runs
        ),
    )
}

fn determinism() -> Verdict {
    let mut cfg = RunConfig { seed: 13, ..Default::default() };
    cfg.train.total_steps = 4096;
    cfg.evaluation.parallel = false;
    let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for d in &dirs {
        cmd_train(&cfg, d.path()).unwrap();
        cmd_generate(&cfg, Some(&d.path().join("policy.bin")), &d.path().join("gen")).unwrap();
    }
    let read = |i: usize, name: &str| std::fs::read(dirs[i].path().join(name)).unwrap();
    // segments.csv also carries wall-clock timings, so it is left out
    let same: Vec<bool> = ["policy.bin", "train_log.csv", "gen/level.txt"]
        .iter()
        .map(|name| read(0, name) == read(1, name))
        .collect();
    check(same.iter().all(|&s| s), format!("checkpoint, train log, level identical: {same:?}"))
}

fn main() {
    let mut results: Vec<(&str, Verdict)> = vec![
        ("metric oracle equivalence", oracle_equivalence()),
        ("KL hand value", kl_hand_value()),
        ("fun band", fun_band()),
        ("corpus statistics", corpus_statistics()),
        ("repairer fuzz", repairer_fuzz()),
        ("playability fixtures", playability_fixtures()),
        ("PPO gradient check", ppo_gradient_check()),
    ];
    let pipeline = Pipeline::new(Backend::procedural());
    let trained = train_all(&pipeline);
    results.extend(training_effectiveness(&pipeline, &trained));
    results.push(("online loop", online_loop(&pipeline, &trained.fhp)));
    results.push(("latency", latency(&pipeline, &trained.fhp)));
    results.push(("determinism", determinism()));

    let mut failed = 0;
    for (name, verdict) in &results {
        let (tag, detail) = match verdict {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("{tag}  {name}: {detail}");
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
