//! Multi-trial experiments on the Mackey-Glass prediction task: learning
//! curves, final-MSE tables, per-iteration timing and Gram eigenspectra.
//!
//! Everything is reproducible from the config and its master seed. Trials run
//! in parallel but each one derives its randomness from its own seed, so the
//! numbers do not depend on the thread count.

mod config;
mod report;
mod run;
mod spectra;

pub use config::{
    AlgorithmSpec, ExperimentConfig, FeatureSpec, FilterSpec, GqSampling, NoiseConfig, NoiseStage, ResolvedAlgorithm, RuleSpec, SeriesConfig,
    SpectraConfig, TimingConfig,
};
pub use report::{
    format_summary, format_timing, load_results, summarize, timing_report, write_outputs, CellSummary, TimingSummary, RESULTS_FILE,
};
pub use run::{checkpoints, prepare_series, run_experiment, ExperimentResults, TimingResult, TrialResult};
pub use spectra::{run_spectra, write_spectra_outputs, SourceSummary, SpectraResults};

pub(crate) const SEED_TRIAL: u64 = 0;
pub(crate) const SEED_MAP: u64 = 1;
pub(crate) const SEED_NOISE: u64 = 2;
pub(crate) const SEED_START: u64 = 3;

/// Mixes `tags` into `master` with the SplitMix64 finalizer.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    tags.iter().fold(mix(master), |acc, &t| mix(acc ^ mix(t)))
}

fn thread_pool(threads: usize) -> crate::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::Error::Experiment(format!("cannot start worker threads: {e}")))
}
