//! Command-line front end for the experiment harness.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ntkaf::harness::{
    format_summary, format_timing, load_results, run_experiment, run_spectra, summarize, timing_report, ExperimentConfig,
};
use ntkaf::Error;

#[derive(Parser)]
#[command(name = "ntkaf", version, about = "Kernel adaptive filtering experiments on the Mackey-Glass series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a multi-trial experiment and write its artifacts.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print the final-MSE table of a finished run.
    Summarize { dir: PathBuf },
    /// Compute averaged Gram eigenspectra for the feature maps in a config.
    Spectra {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print per-iteration timing statistics of a finished run.
    Timing { dir: PathBuf },
}

#[derive(Args)]
struct Overrides {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn load(path: &Path, o: &Overrides) -> ntkaf::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = o.seed {
        cfg.master_seed = s;
    }
    if let Some(t) = o.trials {
        cfg.trials = t;
        cfg.spectra.trials = t;
    }
    if let Some(dir) = &o.out {
        cfg.output_dir = Some(dir.clone());
    }
    if let Some(t) = o.threads {
        cfg.threads = t;
    }
    if cfg.output_dir.is_none() {
        cfg.output_dir = Some(PathBuf::from("results").join(&cfg.name));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> ntkaf::Result<()> {
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = load(&config, &overrides)?;
            let results = run_experiment(&cfg)?;
            print!("{}", format_summary(&summarize(&results)));
            if !results.timing.is_empty() {
                print!("\n{}", format_timing(&timing_report(&results.timing)));
            }
            println!("\nwrote {}", cfg.output_dir.unwrap_or_default().display());
        }
        Command::Summarize { dir } => print!("{}", format_summary(&summarize(&load_results(&dir)?))),
        Command::Spectra { config, overrides } => {
            let cfg = load(&config, &overrides)?;
            let r = run_spectra(&cfg)?;
            println!("{:16} {:>6} {:>12} {:>13} {:>16}", "source", "D", "rank@1e-8", "rank@1e-12", "energy(top D/2)");
            for s in &r.sources {
                let dim = s.feature_dim.map(|d| d.to_string()).unwrap_or_else(|| "-".into());
                println!("{:16} {:>6} {:>12.1} {:>13.1} {:>16.6}", s.label, dim, s.mean_rank_1e8, s.mean_rank_1e12, s.energy_fraction);
            }
            println!("\nwrote {}", cfg.output_dir.unwrap_or_default().display());
        }
        Command::Timing { dir } => {
            let results = load_results(&dir)?;
            if results.timing.is_empty() {
                return Err(Error::Experiment(format!("{} holds no timing samples", dir.display())));
            }
            print!("{}", format_timing(&timing_report(&results.timing)));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
