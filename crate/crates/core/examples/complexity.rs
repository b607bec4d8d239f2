//! Accuracy against per-step cost as the feature dimension grows
//! (D = 8, 36, 120, 330, 792), with QKLMS thresholds picked to give similar
//! dictionary sizes.
//!
//! ```text
//! cargo run --release --example complexity -- [trials]
//! ```

use std::path::{Path, PathBuf};

use ntkaf::harness::{format_summary, format_timing, run_experiment, summarize, timing_report, ExperimentConfig};

fn main() -> ntkaf::Result<()> {
    let mut cfg = ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/complexity.json"))?;
    cfg.trials = std::env::args().nth(1).map_or(20, |t| t.parse().expect("trial count"));
    cfg.output_dir = Some(PathBuf::from("results/complexity"));
    let results = run_experiment(&cfg)?;
    print!("{}", format_summary(&summarize(&results)));
    println!();
    print!("{}", format_timing(&timing_report(&results.timing)));
    Ok(())
}
