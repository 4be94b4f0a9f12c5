//! Scores a designer over many generated levels: in-band share of segments,
//! mean fun, historical deviation and playable segments per level.
//!
//!     cargo run --release --example evaluate -- [policy.bin]

use edrl::designer::{ActMode, Pipeline, PolicyCheckpoint};
use edrl::generator::Backend;
use edrl::online::{evaluate_policy, Agent, EvalConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ck = std::env::args().nth(1).map(|p| PolicyCheckpoint::load(p.as_ref())).transpose()?;
    let agent = match &ck {
        Some(ck) => Agent::Trained { policy: &ck.policy, mode: ActMode::Stochastic },
        None => Agent::Random,
    };
    // a smaller grid than the full 30 x 10 so the example runs in seconds
    let cfg = EvalConfig { initial_segments: 10, trials_per_init: 3, seed: 5, ..Default::default() };
    let report = evaluate_policy(&agent, &Pipeline::new(Backend::procedural()), &cfg)?;
    print!("{}", report.summary_table());
    report.write_rows_csv(std::io::stdout().lock())?;
    Ok(())
}
