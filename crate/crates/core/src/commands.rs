//! Command implementations behind the `edrl` binary. Each command reads a
//! [`RunConfig`], writes its artifacts into an output directory and leaves
//! a `manifest.toml` there recording the seed, the full configuration and
//! SHA-256 hashes of every input and output file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{BackendChoice, ConfigError, RunConfig};
use crate::designer::{
    train_with, ActMode, DesignerError, Pipeline, PolicyCheckpoint, TrainLogRow, TrainOutcome,
};
use crate::generator::{Backend, GeneratorError, Repairer, SegmentPool};
use crate::level::{census, load_corpus, write_census_csv, Level, LevelError, TileAlphabet, SEGMENT_SIZE};
use crate::metrics::{corpus_diversity_stats, write_stats_csv, DiversityStats, MetricError};
use crate::online::{evaluate_policy, generate_online, Agent, EvaluationReport, GenerationReport};
use crate::render::{render_ascii, save_image, RenderStyle};

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CommandError {
    /// 1 for configuration problems, 2 for bad or missing data, 3 for
    /// failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) => 1,
            CommandError::Data(_) => 2,
            CommandError::Runtime(_) => 3,
        }
    }
}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        CommandError::Config(e.to_string())
    }
}

impl From<LevelError> for CommandError {
    fn from(e: LevelError) -> Self {
        CommandError::Data(e.to_string())
    }
}

impl From<GeneratorError> for CommandError {
    fn from(e: GeneratorError) -> Self {
        CommandError::Data(e.to_string())
    }
}

impl From<MetricError> for CommandError {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::Config(_) | MetricError::PatternSize(_) => CommandError::Config(e.to_string()),
            MetricError::EmptyCorpus => CommandError::Data(e.to_string()),
            _ => CommandError::Runtime(e.to_string()),
        }
    }
}

impl From<DesignerError> for CommandError {
    fn from(e: DesignerError) -> Self {
        match e {
            DesignerError::Config(_) => CommandError::Config(e.to_string()),
            DesignerError::Format(_) | DesignerError::Io(_) | DesignerError::Level(_) => {
                CommandError::Data(e.to_string())
            }
            _ => CommandError::Runtime(e.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CommandError {
    CommandError::Runtime(e.to_string())
}

pub fn sha256_file(path: &Path) -> Result<String, CommandError> {
    let bytes = fs::read(path).map_err(|e| CommandError::Data(format!("{}: {e}", path.display())))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Serialize)]
struct FileHash {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    version: &'a str,
    args: BTreeMap<String, String>,
    config: &'a RunConfig,
    inputs: Vec<FileHash>,
    outputs: Vec<FileHash>,
}

/// Collects the files a command reads and writes, then records them.
struct Run<'a> {
    command: &'a str,
    cfg: &'a RunConfig,
    out: PathBuf,
    args: BTreeMap<String, String>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl<'a> Run<'a> {
    fn start(command: &'a str, cfg: &'a RunConfig, out: &Path) -> Result<Self, CommandError> {
        fs::create_dir_all(out).map_err(|e| runtime(format!("{}: {e}", out.display())))?;
        Ok(Self {
            command,
            cfg,
            out: out.to_path_buf(),
            args: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    fn arg(&mut self, key: &str, value: impl ToString) {
        self.args.insert(key.to_string(), value.to_string());
    }

    fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CommandError> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(runtime)?;
        }
        fs::write(&path, bytes).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        self.outputs.push(path.clone());
        Ok(path)
    }

    fn finish(self) -> Result<(), CommandError> {
        let hash = |paths: &[PathBuf]| -> Result<Vec<FileHash>, CommandError> {
            let mut files = Vec::new();
            for p in paths {
                if p.is_dir() {
                    continue;
                }
                files.push(FileHash { path: p.display().to_string(), sha256: sha256_file(p)? });
            }
            Ok(files)
        };
        let manifest = Manifest {
            command: self.command,
            seed: self.cfg.seed,
            version: env!("CARGO_PKG_VERSION"),
            args: self.args.clone(),
            config: self.cfg,
            inputs: hash(&self.inputs)?,
            outputs: hash(&self.outputs)?,
        };
        let text = toml::to_string(&manifest).map_err(runtime)?;
        fs::write(self.out.join("manifest.toml"), text).map_err(runtime)
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<Vec<u8>, CommandError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(runtime)?;
    Ok(buf)
}

/// The backend named by the config, plus the alphabet it uses.
pub fn load_backend(cfg: &RunConfig) -> Result<(Backend, TileAlphabet), CommandError> {
    let alphabet = cfg.alphabet()?;
    let required = |p: &Option<PathBuf>, key: &str| {
        p.clone().ok_or_else(|| CommandError::Config(format!("paths.{key} is required for this backend")))
    };
    let backend = match cfg.backend.kind {
        BackendChoice::Procedural => Backend::procedural(),
        BackendChoice::Pool => Backend::load_pool(&required(&cfg.paths.pool, "pool")?)?,
        BackendChoice::External => Backend::load_decoder(&required(&cfg.paths.decoder, "decoder")?, &alphabet)?,
    };
    Ok((backend, alphabet))
}

pub fn load_pipeline(cfg: &RunConfig) -> Result<Pipeline, CommandError> {
    let (backend, alphabet) = load_backend(cfg)?;
    Ok(cfg.pipeline(backend, alphabet))
}

fn record_backend_inputs(run: &mut Run<'_>, cfg: &RunConfig) {
    match cfg.backend.kind {
        BackendChoice::Pool => cfg.paths.pool.iter().for_each(|p| run.input(p)),
        BackendChoice::External => cfg.paths.decoder.iter().for_each(|p| run.input(p)),
        BackendChoice::Procedural => {}
    }
    cfg.paths.alphabet.iter().for_each(|p| run.input(p));
}

/// Diversity statistics per level type for each slicing stride, plus a
/// per-segment element census.
pub fn cmd_analyze(
    cfg: &RunConfig,
    corpus_dir: &Path,
    strides: &[usize],
    out: &Path,
) -> Result<Vec<DiversityStats>, CommandError> {
    let mut run = Run::start("analyze", cfg, out)?;
    run.arg("corpus", corpus_dir.display());
    run.arg("strides", format!("{strides:?}"));
    let alphabet = cfg.alphabet()?;
    let corpus = load_corpus(corpus_dir, &alphabet)?;
    for level in &corpus {
        run.input(&corpus_dir.join(&level.name));
    }
    let mut stats = Vec::new();
    for &stride in strides {
        stats.extend(corpus_diversity_stats(&corpus, stride, &cfg.metrics)?);
    }
    let bytes = csv_bytes(|b| write_stats_csv(b, &stats))?;
    run.write("diversity_stats.csv", &bytes)?;
    let mut rows = Vec::new();
    for level in &corpus {
        for (i, seg) in level.level.segments().enumerate() {
            rows.push((level.name.as_str(), i, census(&seg)));
        }
    }
    let bytes = csv_bytes(|b| write_census_csv(b, rows.iter().copied()))?;
    run.write("census.csv", &bytes)?;
    run.finish()?;
    Ok(stats)
}

/// Slices the corpus into repaired segments with seeded latent codes.
pub fn cmd_build_pool(cfg: &RunConfig, corpus_dir: &Path, out: &Path) -> Result<SegmentPool, CommandError> {
    let mut run = Run::start("build-pool", cfg, out)?;
    run.arg("corpus", corpus_dir.display());
    let alphabet = cfg.alphabet()?;
    let corpus = load_corpus(corpus_dir, &alphabet)?;
    for level in &corpus {
        run.input(&corpus_dir.join(&level.name));
    }
    let levels: Vec<Level> = corpus.into_iter().map(|c| c.level).collect();
    let pool = SegmentPool::build(&levels, SEGMENT_SIZE, cfg.backend.pool_stride, cfg.seed, &Repairer::new(alphabet))?;
    let mut bytes = Vec::new();
    pool.write_to(&mut bytes)?;
    run.write("pool.bin", &bytes)?;
    run.finish()?;
    Ok(pool)
}

/// Trains a designer and writes the final policy, periodic checkpoints and
/// the training log.
pub fn cmd_train(cfg: &RunConfig, out: &Path) -> Result<TrainOutcome, CommandError> {
    let mut run = Run::start("train", cfg, out)?;
    record_backend_inputs(&mut run, cfg);
    let pipeline = load_pipeline(cfg)?;
    let tcfg = cfg.train_config();
    let mut pending = Vec::new();
    let outcome = train_with(&tcfg, &cfg.reward, pipeline, |p| {
        if tcfg.checkpoint_every > 0 && p.update % tcfg.checkpoint_every == 0 {
            let ck = PolicyCheckpoint {
                policy: p.policy.clone(),
                normalizers: p.normalizers.clone(),
                seed: tcfg.seed,
                steps: p.row.step,
            };
            pending.push((format!("checkpoints/policy_{:06}.bin", p.row.step), ck.to_bytes()));
        }
        Ok(())
    })?;
    for (name, bytes) in pending {
        run.write(&name, &bytes)?;
    }
    let final_ck = PolicyCheckpoint {
        policy: outcome.policy.clone(),
        normalizers: outcome.normalizers.clone(),
        seed: tcfg.seed,
        steps: outcome.steps,
    };
    run.write("policy.bin", &final_ck.to_bytes())?;
    let bytes = csv_bytes(|b| TrainLogRow::write_csv(b, &outcome.log))?;
    run.write("train_log.csv", &bytes)?;
    run.finish()?;
    Ok(outcome)
}

fn load_policy(path: Option<&Path>) -> Result<Option<PolicyCheckpoint>, CommandError> {
    path.map(|p| PolicyCheckpoint::load(p).map_err(CommandError::from)).transpose()
}

/// Generates one level online. Without a policy file the random designer
/// picks the latents.
pub fn cmd_generate(
    cfg: &RunConfig,
    policy: Option<&Path>,
    out: &Path,
) -> Result<(Level, GenerationReport), CommandError> {
    let mut run = Run::start("generate", cfg, out)?;
    record_backend_inputs(&mut run, cfg);
    policy.iter().for_each(|p| run.input(p));
    let pipeline = load_pipeline(cfg)?;
    let ck = load_policy(policy)?;
    let agent = match &ck {
        Some(ck) => Agent::Trained { policy: &ck.policy, mode: ActMode::Stochastic },
        None => Agent::Random,
    };
    run.arg("agent", agent.label());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = pipeline.initial_state(&mut rng)?;
    let (level, report) = generate_online(&agent, &pipeline, init, &cfg.online, &mut rng)?;
    run.write("level.txt", level.serialize().as_bytes())?;
    let bytes = csv_bytes(|b| report.write_segments_csv(b))?;
    run.write("segments.csv", &bytes)?;
    run.write("summary.txt", report.summary().as_bytes())?;
    run.finish()?;
    Ok((level, report))
}

/// Evaluates a policy (or the random designer) over the configured
/// initial segments and trials.
pub fn cmd_evaluate(cfg: &RunConfig, policy: Option<&Path>, out: &Path) -> Result<EvaluationReport, CommandError> {
    let mut run = Run::start("evaluate", cfg, out)?;
    record_backend_inputs(&mut run, cfg);
    policy.iter().for_each(|p| run.input(p));
    let pipeline = load_pipeline(cfg)?;
    let ck = load_policy(policy)?;
    let agent = match &ck {
        Some(ck) => Agent::Trained { policy: &ck.policy, mode: ActMode::Stochastic },
        None => Agent::Random,
    };
    let report = evaluate_policy(&agent, &pipeline, &cfg.eval_config())?;
    if !report.is_consistent() {
        return Err(runtime("evaluation summary does not match its rows"));
    }
    let bytes = csv_bytes(|b| report.write_rows_csv(b))?;
    run.write("evaluation.csv", &bytes)?;
    run.write("summary.txt", report.summary_table().as_bytes())?;
    run.finish()?;
    Ok(report)
}

/// Renders a level file. ASCII output is returned (and written when `out`
/// is given); image output requires `out` and writes `level.png`.
pub fn cmd_render(
    cfg: &RunConfig,
    level_path: &Path,
    style: RenderStyle,
    out: Option<&Path>,
) -> Result<String, CommandError> {
    let alphabet = cfg.alphabet()?;
    let text = fs::read_to_string(level_path)
        .map_err(|e| CommandError::Data(format!("{}: {e}", level_path.display())))?;
    let level = Level::parse(&text, &alphabet)?;
    let ascii = render_ascii(&level);
    let Some(out) = out else {
        return match style {
            RenderStyle::Ascii => Ok(ascii),
            RenderStyle::Image => Err(CommandError::Config("image rendering needs --out".into())),
        };
    };
    let mut run = Run::start("render", cfg, out)?;
    run.input(level_path);
    match style {
        RenderStyle::Ascii => {
            run.arg("style", "ascii");
            run.write("level.txt", ascii.as_bytes())?;
        }
        RenderStyle::Image => {
            run.arg("style", "image");
            let path = run.path("level.png");
            save_image(&level, 8, &path).map_err(runtime)?;
            run.outputs.push(path);
        }
    }
    run.finish()?;
    Ok(ascii)
}
