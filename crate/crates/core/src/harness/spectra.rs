use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, MapSource, ResolvedAlgorithm};
use super::run::prepare_series;
use super::{derive_seed, thread_pool, SEED_MAP, SEED_START};
use crate::analysis::{average_spectra, eigenspectrum, energy_fraction, gram_matrix, numerical_rank, write_spectra_csv, KernelSource, SpectrumStats};
use crate::data::embed;
use crate::error::Result;

/// Rank and eigendecay of one kernel source, averaged over trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSummary {
    pub label: String,
    /// Feature dimension; `None` for the exact kernel.
    pub feature_dim: Option<usize>,
    /// Mean numerical rank at `1e-8` of the largest eigenvalue.
    pub mean_rank_1e8: f64,
    /// Mean numerical rank at `1e-12` of the largest eigenvalue.
    pub mean_rank_1e12: f64,
    /// Share of the spectrum's mass in the leading `energy_index` eigenvalues.
    pub energy_fraction: f64,
    pub energy_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraResults {
    pub config_hash: String,
    pub points: usize,
    pub stats: Vec<SpectrumStats>,
    pub sources: Vec<SourceSummary>,
}

/// Gram eigenspectra on `spectra.points` consecutive embedded inputs, for the
/// exact kernel and for every distinct feature map among the algorithms.
pub fn run_spectra(cfg: &ExperimentConfig) -> Result<SpectraResults> {
    cfg.validate()?;
    let algorithms: Vec<ResolvedAlgorithm> = {
        let mut seen = Vec::new();
        cfg.resolved_algorithms()?
            .into_iter()
            .filter(|a| match &a.features {
                Some(f) if !seen.contains(f) => {
                    seen.push(f.clone());
                    true
                }
                _ => false,
            })
            .collect()
    };
    let maps: Vec<MapSource> = algorithms.iter().map(|a| cfg.map_source(a)).collect::<Result<_>>()?;
    let (_, series) = prepare_series(cfg)?;
    let d = cfg.embedding_dim;
    let n = cfg.spectra.points;
    if series.len() < n + d {
        return Err(crate::error::invalid(format!("series too short for {n} spectra points")));
    }

    let per_trial = |trial: usize| -> Result<Vec<Vec<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, &[SEED_START, trial as u64]));
        let start = rng.random_range(0..=series.len() - n - d);
        let data = embed(&series, d, start, n)?;
        let mut out = vec![eigenspectrum(&gram_matrix(&data.inputs, d, KernelSource::Exact { sigma: cfg.sigma })?)?];
        for (alg, source) in algorithms.iter().zip(&maps) {
            let map = match source {
                MapSource::Fixed(m) => m.clone(),
                MapSource::PerTrial { base } => {
                    let seed = derive_seed(cfg.master_seed, &[SEED_MAP, alg.index as u64, trial as u64]);
                    std::sync::Arc::new(alg.features.as_ref().expect("feature source").build(d, cfg.sigma, seed, base.as_deref())?)
                }
                MapSource::None => unreachable!("only algorithms with features are kept"),
            };
            out.push(eigenspectrum(&gram_matrix(&data.inputs, d, KernelSource::Features(&map))?)?);
        }
        Ok(out)
    };
    let pool = thread_pool(cfg.threads)?;
    let trials: Vec<Vec<Vec<f64>>> = pool.install(|| (0..cfg.spectra.trials).into_par_iter().map(per_trial).collect::<Result<_>>())?;

    let mut labels = vec!["exact".to_string()];
    labels.extend(algorithms.iter().map(|a| a.label.clone()));
    let dims: Vec<Option<usize>> = std::iter::once(None)
        .chain(maps.iter().map(|m| match m {
            MapSource::Fixed(m) => Some(m.output_dim()),
            _ => None,
        }))
        .collect();
    let mut stats = Vec::new();
    let mut sources = Vec::new();
    for (k, label) in labels.iter().enumerate() {
        let spectra: Vec<Vec<f64>> = trials.iter().map(|t| t[k].clone()).collect();
        let feature_dim = if k == 0 { None } else { Some(dims[k].unwrap_or_else(|| per_trial_dim(cfg, &algorithms[k - 1]))) };
        let energy_index = feature_dim.map_or_else(|| algorithms.iter().map(|a| per_trial_dim(cfg, a)).max().unwrap_or(n) / 2, |m| m / 2);
        let count = spectra.len() as f64;
        sources.push(SourceSummary {
            label: label.clone(),
            feature_dim,
            mean_rank_1e8: spectra.iter().map(|s| numerical_rank(s, 1e-8) as f64).sum::<f64>() / count,
            mean_rank_1e12: spectra.iter().map(|s| numerical_rank(s, 1e-12) as f64).sum::<f64>() / count,
            energy_fraction: spectra.iter().map(|s| energy_fraction(s, energy_index)).sum::<f64>() / count,
            energy_index,
        });
        stats.push(average_spectra(label.clone(), &spectra)?);
    }
    let results = SpectraResults { config_hash: cfg.hash(), points: n, stats, sources };
    if let Some(dir) = &cfg.output_dir {
        write_spectra_outputs(&results, dir)?;
    }
    Ok(results)
}

fn per_trial_dim(cfg: &ExperimentConfig, alg: &ResolvedAlgorithm) -> usize {
    use super::FeatureSpec::*;
    match alg.features.as_ref() {
        Some(Rff1 { dim } | Rff2 { dim }) => *dim,
        Some(Gq { dim: Some(dim), .. }) => *dim,
        Some(f) => f.build(cfg.embedding_dim, cfg.sigma, 0, None).map(|m| m.output_dim()).unwrap_or(0),
        None => 0,
    }
}

/// `spectra.csv` with index-wise mean and std per source, and
/// `spectra_summary.csv` with ranks and energy fractions.
pub fn write_spectra_outputs(results: &SpectraResults, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let hash = format!("config_hash={}", results.config_hash);
    write_spectra_csv(&results.stats, Some(&hash), BufWriter::new(File::create(dir.join("spectra.csv"))?))?;
    let mut f = BufWriter::new(File::create(dir.join("spectra_summary.csv"))?);
    writeln!(f, "# {hash}")?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["source", "feature_dim", "mean_rank_1e-8", "mean_rank_1e-12", "energy_index", "energy_fraction"])?;
    for s in &results.sources {
        w.write_record([
            s.label.clone(),
            s.feature_dim.map(|d| d.to_string()).unwrap_or_default(),
            s.mean_rank_1e8.to_string(),
            s.mean_rank_1e12.to_string(),
            s.energy_index.to_string(),
            s.energy_fraction.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
