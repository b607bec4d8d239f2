use std::fs::File;
use std::io::{BufWriter, Write};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, MapSource, NoiseStage, ResolvedAlgorithm};
use super::{derive_seed, thread_pool, SEED_MAP, SEED_NOISE, SEED_START, SEED_TRIAL};
use crate::data::{add_awgn, embed, generate_mackey_glass, standardize, EmbeddedDataset};
use crate::error::{Error, Result};
use crate::feature_maps::FeatureMap;
use crate::filters::OnlineFilter;

/// Outcome of one algorithm on one trial at one noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub algorithm: String,
    pub snr_db: Option<f64>,
    pub trial: usize,
    pub seed: u64,
    pub train_start: usize,
    /// Test MSE at each checkpoint.
    pub curve: Vec<f64>,
    pub final_mse: f64,
    /// Dictionary size at each checkpoint, for kernel-trick filters.
    pub dictionary_sizes: Option<Vec<usize>>,
    /// Set when the trial failed; the curve is then empty.
    pub error: Option<String>,
}

impl TrialResult {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Single-threaded timing of one algorithm on the first trial's data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingResult {
    pub algorithm: String,
    /// Seconds to build the feature map (zero without one).
    pub build_seconds: f64,
    /// Median over the timed passes of the wall time of each training step.
    pub iteration_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub algorithms: Vec<String>,
    /// Training iterations after which the test MSE was measured.
    pub checkpoints: Vec<usize>,
    pub trials: Vec<TrialResult>,
    pub timing: Vec<TimingResult>,
}

/// `0, stride, 2 stride, ...` plus `train_count` itself.
pub fn checkpoints(train_count: usize, stride: usize) -> Vec<usize> {
    let mut c: Vec<usize> = (0..=train_count).step_by(stride.max(1)).collect();
    if c.last() != Some(&train_count) {
        c.push(train_count);
    }
    c
}

/// Raw and standardized Mackey-Glass series for a config.
pub fn prepare_series(cfg: &ExperimentConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let raw = generate_mackey_glass(&cfg.series.mackey_glass, cfg.series.length)?;
    let (std, _) = standardize(&raw)?;
    Ok((raw, std))
}

struct Context {
    raw: Vec<f64>,
    clean: Vec<f64>,
    algorithms: Vec<ResolvedAlgorithm>,
    maps: Vec<MapSource>,
    checkpoints: Vec<usize>,
}

struct Split {
    start: usize,
    train: EmbeddedDataset,
    test: EmbeddedDataset,
}

fn trial_split(cfg: &ExperimentConfig, series: &[f64], trial: usize) -> Result<Split> {
    let d = cfg.embedding_dim;
    let span = cfg.train_count + cfg.test_count + d;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, &[SEED_START, trial as u64]));
    let start = rng.random_range(0..=series.len() - span);
    let train = embed(series, d, start, cfg.train_count)?;
    let test = embed(series, d, start + cfg.train_count, cfg.test_count)?;
    let (tr, te) = (train.target_indices(), test.target_indices());
    if tr.end > te.start {
        return Err(Error::Experiment(format!("training targets {tr:?} overlap test targets {te:?}")));
    }
    Ok(Split { start, train, test })
}

fn noisy_series(cfg: &ExperimentConfig, ctx: &Context, trial: usize, snr_index: usize) -> Result<Option<Vec<f64>>> {
    let Some(snr) = cfg.noise.snr_db[snr_index] else { return Ok(None) };
    let seed = derive_seed(cfg.master_seed, &[SEED_NOISE, trial as u64, snr_index as u64]);
    Ok(Some(match cfg.noise.stage {
        NoiseStage::AfterStandardization => add_awgn(&ctx.clean, snr, seed)?,
        NoiseStage::BeforeStandardization => standardize(&add_awgn(&ctx.raw, snr, seed)?)?.0,
    }))
}

/// Optional feature map followed by a filter.
struct Pipeline {
    map: Option<Arc<FeatureMap>>,
    filter: Box<dyn OnlineFilter + Send>,
    z: Vec<f64>,
}

impl Pipeline {
    fn new(cfg: &ExperimentConfig, alg: &ResolvedAlgorithm, map: Option<Arc<FeatureMap>>) -> Result<Self> {
        let dim = map.as_ref().map_or(cfg.embedding_dim, |m| m.output_dim());
        Ok(Self { filter: alg.build_filter(dim, cfg.sigma)?, z: vec![0.0; dim], map })
    }

    fn update(&mut self, x: &[f64], y: f64) -> Result<()> {
        match &self.map {
            Some(m) => {
                m.map_into(x, &mut self.z)?;
                self.filter.update(&self.z, y)?;
            }
            None => {
                self.filter.update(x, y)?;
            }
        }
        Ok(())
    }

    /// Test inputs in the space the filter works in.
    fn transform(&self, data: &EmbeddedDataset) -> Result<Vec<Vec<f64>>> {
        data.iter().map(|(x, _)| self.map.as_ref().map_or_else(|| Ok(x.to_vec()), |m| m.map(x))).collect()
    }

    fn mse(&self, inputs: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
        let mut sum = 0.0;
        for (z, y) in inputs.iter().zip(targets) {
            let e = y - self.filter.predict(z)?;
            sum += e * e;
        }
        let mse = sum / targets.len() as f64;
        if !mse.is_finite() {
            return Err(Error::NumericalBreakdown(format!("test MSE is {mse}")));
        }
        Ok(mse)
    }
}

fn resolve_map(cfg: &ExperimentConfig, alg: &ResolvedAlgorithm, source: &MapSource, trial: usize) -> Result<Option<Arc<FeatureMap>>> {
    Ok(match source {
        MapSource::None => None,
        MapSource::Fixed(m) => Some(m.clone()),
        MapSource::PerTrial { base } => {
            let seed = derive_seed(cfg.master_seed, &[SEED_MAP, alg.index as u64, trial as u64]);
            let features = alg.features.as_ref().expect("per-trial source implies features");
            Some(Arc::new(features.build(cfg.embedding_dim, cfg.sigma, seed, base.as_deref())?))
        }
    })
}

fn run_one(cfg: &ExperimentConfig, ctx: &Context, alg: &ResolvedAlgorithm, split: &Split, trial: usize) -> Result<(Vec<f64>, Option<Vec<usize>>)> {
    let map = resolve_map(cfg, alg, &ctx.maps[alg.index], trial)?;
    let mut p = Pipeline::new(cfg, alg, map)?;
    let test_inputs = p.transform(&split.test)?;
    let mut curve = Vec::with_capacity(ctx.checkpoints.len());
    let mut sizes = alg.is_kernel_trick().then(|| Vec::with_capacity(ctx.checkpoints.len()));
    let mut record = |p: &Pipeline| -> Result<()> {
        curve.push(p.mse(&test_inputs, &split.test.targets)?);
        if let Some(s) = sizes.as_mut() {
            s.push(p.filter.dictionary_size().unwrap_or(0));
        }
        Ok(())
    };
    record(&p)?;
    let mut next = 1;
    for (i, (x, y)) in split.train.iter().enumerate() {
        p.update(x, y)?;
        if ctx.checkpoints.get(next) == Some(&(i + 1)) {
            record(&p)?;
            next += 1;
        }
    }
    Ok((curve, sizes))
}

fn run_unit(cfg: &ExperimentConfig, ctx: &Context, trial: usize, snr_index: usize) -> Vec<TrialResult> {
    let seed = derive_seed(cfg.master_seed, &[SEED_TRIAL, trial as u64]);
    let snr_db = cfg.noise.snr_db[snr_index];
    let prepared = noisy_series(cfg, ctx, trial, snr_index)
        .and_then(|noisy| trial_split(cfg, noisy.as_deref().unwrap_or(&ctx.clean), trial));
    ctx.algorithms
        .iter()
        .map(|alg| {
            let outcome = prepared.as_ref().map_err(|e| e.to_string()).and_then(|split| {
                run_one(cfg, ctx, alg, split, trial).map(|r| (split.start, r)).map_err(|e| e.to_string())
            });
            match outcome {
                Ok((train_start, (curve, dictionary_sizes))) => TrialResult {
                    algorithm: alg.label.clone(),
                    snr_db,
                    trial,
                    seed,
                    train_start,
                    final_mse: *curve.last().expect("at least one checkpoint"),
                    curve,
                    dictionary_sizes,
                    error: None,
                },
                Err(e) => {
                    log::warn!("{} trial {trial} failed: {e}", alg.label);
                    TrialResult {
                        algorithm: alg.label.clone(),
                        snr_db,
                        trial,
                        seed,
                        train_start: 0,
                        curve: Vec::new(),
                        final_mse: f64::NAN,
                        dictionary_sizes: None,
                        error: Some(e),
                    }
                }
            }
        })
        .collect()
}

fn time_algorithm(cfg: &ExperimentConfig, ctx: &Context, alg: &ResolvedAlgorithm) -> Result<TimingResult> {
    let split = trial_split(cfg, &ctx.clean, 0)?;
    let map = resolve_map(cfg, alg, &ctx.maps[alg.index], 0)?;
    let build_seconds = match (&alg.features, &ctx.maps[alg.index]) {
        (Some(features), source) => {
            let base = match source {
                MapSource::PerTrial { base } => base.as_deref(),
                _ => None,
            };
            let t = Instant::now();
            features.build(cfg.embedding_dim, cfg.sigma, 0, base)?;
            t.elapsed().as_secs_f64()
        }
        (None, _) => 0.0,
    };
    let pass = |timed: bool| -> Result<Vec<f64>> {
        let mut p = Pipeline::new(cfg, alg, map.clone())?;
        let mut times = Vec::with_capacity(if timed { split.train.len() } else { 0 });
        for (x, y) in split.train.iter() {
            let t = Instant::now();
            p.update(x, y)?;
            if timed {
                times.push(t.elapsed().as_secs_f64());
            }
        }
        Ok(times)
    };
    pass(false)?;
    let runs: Vec<Vec<f64>> = (0..cfg.timing.repeats).map(|_| pass(true)).collect::<Result<_>>()?;
    let iteration_seconds = (0..split.train.len())
        .map(|i| {
            let mut v: Vec<f64> = runs.iter().map(|r| r[i]).collect();
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        })
        .collect();
    Ok(TimingResult { algorithm: alg.label.clone(), build_seconds, iteration_seconds })
}

/// Runs every algorithm on every trial and noise level. When the config names
/// an output directory, completed trials are appended to `progress.jsonl` as
/// they finish and the final artifacts are written at the end.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    cfg.validate()?;
    let config_hash = cfg.hash();
    let algorithms = cfg.resolved_algorithms()?;
    let maps = algorithms.iter().map(|a| cfg.map_source(a)).collect::<Result<Vec<_>>>()?;
    let (raw, clean) = prepare_series(cfg)?;
    let ctx = Context { raw, clean, algorithms, maps, checkpoints: checkpoints(cfg.train_count, cfg.checkpoint_stride) };

    let progress = match &cfg.output_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Some(Mutex::new(BufWriter::new(File::create(dir.join("progress.jsonl"))?)))
        }
        None => None,
    };
    let collect = |results: &[TrialResult]| -> Result<()> {
        if let Some(w) = &progress {
            let mut w = w.lock().expect("progress writer poisoned");
            for r in results {
                serde_json::to_writer(&mut *w, r)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
        Ok(())
    };

    let units: Vec<(usize, usize)> = (0..cfg.noise.snr_db.len()).flat_map(|s| (0..cfg.trials).map(move |t| (s, t))).collect();
    let pool = thread_pool(cfg.threads)?;
    let per_unit: Vec<Vec<TrialResult>> = pool.install(|| {
        units
            .par_iter()
            .map(|&(s, t)| {
                let r = run_unit(cfg, &ctx, t, s);
                collect(&r).map(|_| r)
            })
            .collect::<Result<_>>()
    })?;

    let n_algs = ctx.algorithms.len();
    let mut trials: Vec<TrialResult> = Vec::with_capacity(per_unit.len() * n_algs);
    for a in 0..n_algs {
        for unit in &per_unit {
            trials.push(unit[a].clone());
        }
    }
    for alg in &ctx.algorithms {
        let failed = trials.iter().filter(|t| t.algorithm == alg.label && t.failed()).count();
        let total = cfg.trials * cfg.noise.snr_db.len();
        if failed * 20 > total {
            let first = trials.iter().find(|t| t.algorithm == alg.label && t.failed()).and_then(|t| t.error.clone()).unwrap_or_default();
            return Err(Error::Experiment(format!("{}: {failed} of {total} trials failed (first error: {first})", alg.label)));
        }
    }

    let timing = if cfg.timing.enabled {
        ctx.algorithms.iter().map(|a| time_algorithm(cfg, &ctx, a)).collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let results = ExperimentResults {
        config_hash,
        config: cfg.clone(),
        algorithms: ctx.algorithms.iter().map(|a| a.label.clone()).collect(),
        checkpoints: ctx.checkpoints,
        trials,
        timing,
    };
    if let Some(dir) = &cfg.output_dir {
        super::write_outputs(&results, dir)?;
    }
    Ok(results)
}
