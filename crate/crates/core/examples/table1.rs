//! Reproduces the final-MSE table: LMS, the four no-trick KLMS variants,
//! QKLMS and KLMS at D = 330, eta = 0.4, on clean data and at 14 and 8 dB.
//!
//! ```text
//! cargo run --release --example table1 -- [trials] [output dir]
//! ```

use std::path::{Path, PathBuf};

use ntkaf::harness::{format_summary, format_timing, run_experiment, summarize, timing_report, ExperimentConfig};

fn main() -> ntkaf::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/table1.json"))?;
    cfg.trials = args.next().map_or(50, |t| t.parse().expect("trial count"));
    cfg.output_dir = Some(args.next().map_or_else(|| PathBuf::from("results/table1"), PathBuf::from));
    let results = run_experiment(&cfg)?;
    print!("{}", format_summary(&summarize(&results)));
    println!();
    print!("{}", format_timing(&timing_report(&results.timing)));
    Ok(())
}
