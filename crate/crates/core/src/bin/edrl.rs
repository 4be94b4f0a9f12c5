use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use edrl::commands::{self, CommandError};
use edrl::config::RunConfig;
use edrl::online::ResampleMode;
use edrl::render::RenderStyle;

#[derive(Parser)]
#[command(name = "edrl", version, about = "Train and run a level-designing agent")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Diversity statistics of a level corpus.
    Analyze {
        corpus: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,7,14")]
        strides: Vec<usize>,
    },
    /// Build a segment pool backend from a corpus.
    BuildPool { corpus: PathBuf },
    /// Train a designer policy.
    Train {
        #[arg(long)]
        steps: Option<u64>,
        /// Reward components, e.g. FHP.
        #[arg(long)]
        reward: Option<String>,
    },
    /// Generate one level online.
    Generate {
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        segments: Option<usize>,
        #[arg(long)]
        resample: Option<String>,
    },
    /// Evaluate a policy, or the random designer without --policy.
    Evaluate {
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Render a level file as ascii or image.
    Render {
        level: PathBuf,
        #[arg(long, default_value = "ascii")]
        style: String,
    },
}

fn load_config(common: &Common) -> Result<RunConfig, CommandError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn config_error(e: impl std::fmt::Display) -> CommandError {
    CommandError::Config(e.to_string())
}

fn run(cli: Cli) -> Result<(), CommandError> {
    let mut cfg = load_config(&cli.common)?;
    let out: &Path = &cli.common.out;
    match cli.command {
        Command::Analyze { corpus, strides } => {
            for s in commands::cmd_analyze(&cfg, &corpus, &strides, out)? {
                println!("{:<12} stride {:>2}  n={:<5} D = {:.3} ± {:.3}", s.kind, s.stride, s.count, s.mean, s.std);
            }
        }
        Command::BuildPool { corpus } => {
            let pool = commands::cmd_build_pool(&cfg, &corpus, out)?;
            println!("pool with {} segments written to {}", pool.len(), out.join("pool.bin").display());
        }
        Command::Train { steps, reward } => {
            if let Some(steps) = steps {
                cfg.train.total_steps = steps;
            }
            if let Some(label) = reward {
                cfg.reward = edrl::designer::RewardConfig::parse(&label).map_err(config_error)?;
            }
            cfg.validate()?;
            let outcome = commands::cmd_train(&cfg, out)?;
            if let Some(last) = outcome.log.last() {
                println!("{} steps, last mean return {:.3}", outcome.steps, last.mean_return);
            }
        }
        Command::Generate { policy, segments, resample } => {
            if let Some(n) = segments {
                cfg.online.target_segments = n;
            }
            if let Some(mode) = resample {
                cfg.online.resample_mode = mode.parse::<ResampleMode>().map_err(config_error)?;
            }
            cfg.validate()?;
            let (_, report) = commands::cmd_generate(&cfg, policy.as_deref(), out)?;
            print!("{}", report.summary());
        }
        Command::Evaluate { policy } => {
            let report = commands::cmd_evaluate(&cfg, policy.as_deref(), out)?;
            print!("{}", report.summary_table());
        }
        Command::Render { level, style } => {
            let style: RenderStyle = style.parse().map_err(CommandError::Config)?;
            let to_file = cli.common.out != Path::new("out") || style == RenderStyle::Image;
            let text = commands::cmd_render(&cfg, &level, style, to_file.then_some(out))?;
            if style == RenderStyle::Ascii {
                print!("{text}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("edrl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
