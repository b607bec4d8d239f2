use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::MgParams;
use crate::error::{invalid, Result};
use crate::feature_maps::{build_gq, build_gq_distinct, build_rff1, build_rff2, build_taylor, FeatureMap};
use crate::filters::{ExRls, FbQklms, Klms, Krls, Lms, OnlineFilter, Qklms, QuantizationMetric, Rls};
use crate::quadrature::{dense_grid_rule, nnls_weights, sparse_grid_rule, sparse_level_for_degree, QuadratureRule};

/// A complete experiment description, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_train")]
    pub train_count: usize,
    #[serde(default = "default_test")]
    pub test_count: usize,
    #[serde(default = "default_embedding")]
    pub embedding_dim: usize,
    /// Gaussian kernel bandwidth shared by every algorithm. Required.
    pub sigma: f64,
    /// Step sizes for LMS-type filters that do not fix their own.
    #[serde(default = "default_etas")]
    pub etas: Vec<f64>,
    #[serde(default = "default_stride")]
    pub checkpoint_stride: usize,
    #[serde(default)]
    pub series: SeriesConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub timing: TimingConfig,
    #[serde(default)]
    pub spectra: SpectraConfig,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub algorithms: Vec<AlgorithmSpec>,
}

fn default_name() -> String {
    "experiment".into()
}
fn default_trials() -> usize {
    200
}
fn default_train() -> usize {
    2000
}
fn default_test() -> usize {
    200
}
fn default_embedding() -> usize {
    7
}
fn default_etas() -> Vec<f64> {
    vec![0.1, 0.2, 0.4]
}
fn default_stride() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    /// Number of samples generated after burn-in.
    #[serde(default = "default_series_len")]
    pub length: usize,
    #[serde(default)]
    pub mackey_glass: MgParams,
}

fn default_series_len() -> usize {
    5000
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self { length: default_series_len(), mackey_glass: MgParams::default() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseStage {
    /// Noise is added to the standardized series, so the SNR holds for the
    /// values the filters actually see.
    #[default]
    AfterStandardization,
    /// Noise is added to the raw series, which is then standardized.
    BeforeStandardization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// SNR levels in dB; `null` is the clean series.
    #[serde(default = "default_snrs")]
    pub snr_db: Vec<Option<f64>>,
    #[serde(default)]
    pub stage: NoiseStage,
}

fn default_snrs() -> Vec<Option<f64>> {
    vec![None]
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { snr_db: default_snrs(), stage: NoiseStage::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    /// Timed passes per algorithm; the per-iteration median is kept.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

fn yes() -> bool {
    true
}
fn default_repeats() -> usize {
    3
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self { enabled: true, repeats: default_repeats() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectraConfig {
    #[serde(default = "default_spectra_points")]
    pub points: usize,
    #[serde(default = "default_spectra_trials")]
    pub trials: usize,
}

fn default_spectra_points() -> usize {
    500
}
fn default_spectra_trials() -> usize {
    20
}

impl Default for SpectraConfig {
    fn default() -> Self {
        Self { points: default_spectra_points(), trials: default_spectra_trials() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub label: String,
    pub filter: FilterSpec,
    #[serde(default)]
    pub features: Option<FeatureSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterSpec {
    Lms {
        #[serde(default)]
        eta: Option<f64>,
    },
    Rls {
        #[serde(default = "one")]
        lambda: f64,
        #[serde(default = "default_delta")]
        delta: f64,
    },
    ExRls {
        #[serde(default = "one")]
        lambda: f64,
        #[serde(default = "default_delta")]
        delta: f64,
        #[serde(default = "one")]
        alpha: f64,
        #[serde(default)]
        q: f64,
    },
    Klms {
        #[serde(default)]
        eta: Option<f64>,
    },
    Qklms {
        #[serde(default)]
        eta: Option<f64>,
        q_factor: f64,
        #[serde(default)]
        metric: QuantizationMetric,
    },
    FbQklms {
        #[serde(default)]
        eta: Option<f64>,
        q_factor: f64,
        #[serde(default)]
        metric: QuantizationMetric,
        budget: usize,
        #[serde(default = "default_decay")]
        decay: f64,
    },
    Krls {
        #[serde(default = "default_regularizer")]
        regularizer: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    100.0
}
fn default_decay() -> f64 {
    0.9
}
fn default_regularizer() -> f64 {
    0.01
}

impl FilterSpec {
    fn eta(&self) -> Option<Option<f64>> {
        match self {
            Self::Lms { eta } | Self::Klms { eta } | Self::Qklms { eta, .. } | Self::FbQklms { eta, .. } => Some(*eta),
            _ => None,
        }
    }

    fn set_eta(&mut self, value: f64) {
        if let Self::Lms { eta } | Self::Klms { eta } | Self::Qklms { eta, .. } | Self::FbQklms { eta, .. } = self {
            *eta = Some(value);
        }
    }

    pub fn is_kernel_trick(&self) -> bool {
        matches!(self, Self::Klms { .. } | Self::Qklms { .. } | Self::FbQklms { .. } | Self::Krls { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeatureSpec {
    Rff1 { dim: usize },
    Rff2 { dim: usize },
    Taylor { degree: u32 },
    Gq {
        rule: RuleSpec,
        /// Number of features; the rule is subsampled to `dim / 2` nodes.
        /// Omit to use every node of the rule.
        #[serde(default)]
        dim: Option<usize>,
        /// Draw a new subsample in every trial instead of one shared map.
        #[serde(default = "yes")]
        resample_per_trial: bool,
        #[serde(default)]
        sampling: GqSampling,
    },
}

/// How a GQ rule is cut down to `dim / 2` nodes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GqSampling {
    /// Independent draws by weight; repeated draws stay separate features.
    #[default]
    Independent,
    /// Mirror nodes merged, then draws by weight until the nodes are distinct.
    Distinct,
}

impl FeatureSpec {
    fn is_random(&self) -> bool {
        match self {
            Self::Rff1 { .. } | Self::Rff2 { .. } => true,
            Self::Taylor { .. } => false,
            Self::Gq { dim, resample_per_trial, rule, .. } => *resample_per_trial && (dim.is_some() || matches!(rule, RuleSpec::Nnls { .. })),
        }
    }
}

/// Base quadrature rule for `N(0, I)` behind a GQ map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleSpec {
    /// Tensor grid with the fewest points per axis exact to `degree`.
    Dense { degree: u32 },
    /// Smolyak grid exact to `degree`. Its weights are signed, so
    /// `refit_degree` must be given to replace them by NNLS weights.
    Sparse { degree: u32, refit_degree: Option<u32> },
    /// `points` standard-normal nodes with NNLS weights matching moments up
    /// to `degree`.
    Nnls { points: usize, degree: u32 },
}

impl RuleSpec {
    pub fn build(&self, d: usize, seed: u64) -> Result<QuadratureRule> {
        match *self {
            RuleSpec::Dense { degree } => dense_grid_rule(d, (degree as usize + 2) / 2),
            RuleSpec::Sparse { degree, refit_degree } => {
                let rule = sparse_grid_rule(d, sparse_level_for_degree(degree))?;
                match refit_degree {
                    Some(r) => Ok(nnls_weights(d, rule.node_matrix(), r)?.rule),
                    None => Ok(rule),
                }
            }
            RuleSpec::Nnls { points, degree } => {
                use rand::SeedableRng;
                use rand_distr::{Distribution, StandardNormal};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let pts: Vec<f64> = (0..points * d).map(|_| StandardNormal.sample(&mut rng)).collect();
                Ok(nnls_weights(d, &pts, degree)?.rule)
            }
        }
    }
}

impl FeatureSpec {
    /// Builds the map for input dimension `d`. `base` caches the quadrature
    /// rule between calls.
    pub fn build(&self, d: usize, sigma: f64, seed: u64, base: Option<&QuadratureRule>) -> Result<FeatureMap> {
        match self {
            FeatureSpec::Rff1 { dim } => build_rff1(d, *dim, sigma, seed),
            FeatureSpec::Rff2 { dim } => build_rff2(d, *dim, sigma, seed),
            FeatureSpec::Taylor { degree } => build_taylor(d, *degree, sigma),
            FeatureSpec::Gq { rule, dim, sampling, .. } => {
                let owned;
                let base = match base {
                    Some(b) => b,
                    None => {
                        owned = rule.build(d, seed)?;
                        &owned
                    }
                };
                let target = match dim {
                    Some(n) if n % 2 != 0 || *n == 0 => return Err(invalid(format!("GQ dimension must be even and positive, got {n}"))),
                    Some(n) => Some(n / 2),
                    None => None,
                };
                match (sampling, target) {
                    (GqSampling::Distinct, Some(t)) => build_gq_distinct(d, sigma, base, t, seed),
                    _ => build_gq(d, sigma, base, target, Some(seed)),
                }
            }
        }
    }
}

/// One algorithm after expanding the step-size list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedAlgorithm {
    pub label: String,
    pub filter: FilterSpec,
    pub features: Option<FeatureSpec>,
    /// Position in the expanded list; part of every derived seed.
    pub index: usize,
}

impl ResolvedAlgorithm {
    pub fn is_kernel_trick(&self) -> bool {
        self.filter.is_kernel_trick()
    }

    /// Whether the feature map has to be rebuilt in every trial.
    pub fn map_varies_per_trial(&self) -> bool {
        self.features.as_ref().is_some_and(FeatureSpec::is_random)
    }

    pub fn build_filter(&self, input_dim: usize, sigma: f64) -> Result<Box<dyn OnlineFilter + Send>> {
        let eta = |e: &Option<f64>| e.ok_or_else(|| invalid(format!("{}: no step size", self.label)));
        Ok(match &self.filter {
            FilterSpec::Lms { eta: e } => Box::new(Lms::new(input_dim, eta(e)?)),
            FilterSpec::Rls { lambda, delta } => Box::new(Rls::new(input_dim, *lambda, *delta)?),
            FilterSpec::ExRls { lambda, delta, alpha, q } => Box::new(ExRls::new(input_dim, *lambda, *delta, *alpha, *q)?),
            FilterSpec::Klms { eta: e } => Box::new(Klms::new(input_dim, eta(e)?, sigma)),
            FilterSpec::Qklms { eta: e, q_factor, metric } => Box::new(Qklms::new(input_dim, eta(e)?, sigma, *q_factor).with_metric(*metric)),
            FilterSpec::FbQklms { eta: e, q_factor, metric, budget, decay } => {
                Box::new(FbQklms::new(input_dim, eta(e)?, sigma, *q_factor, *budget, *decay)?.with_metric(*metric))
            }
            FilterSpec::Krls { regularizer } => Box::new(Krls::new(input_dim, sigma, *regularizer)?),
        })
    }
}

/// A map shared by every trial, or the recipe to build one per trial.
#[derive(Debug, Clone)]
pub(crate) enum MapSource {
    None,
    Fixed(Arc<FeatureMap>),
    PerTrial { base: Option<Arc<QuadratureRule>> },
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("trials", self.trials),
            ("train_count", self.train_count),
            ("test_count", self.test_count),
            ("embedding_dim", self.embedding_dim),
            ("checkpoint_stride", self.checkpoint_stride),
            ("timing.repeats", self.timing.repeats),
            ("spectra.points", self.spectra.points),
            ("spectra.trials", self.spectra.trials),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(invalid(format!("{name} must be at least 1")));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(invalid(format!("sigma must be positive and finite, got {}", self.sigma)));
        }
        if self.etas.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(invalid("every eta must be positive and finite"));
        }
        if self.noise.snr_db.is_empty() || self.noise.snr_db.iter().flatten().any(|s| !s.is_finite()) {
            return Err(invalid("snr_db must list finite values or null for clean data"));
        }
        let needed = self.train_count + self.test_count + self.embedding_dim;
        if self.series.length < needed {
            return Err(invalid(format!("series length {} is shorter than train + test + d = {needed}", self.series.length)));
        }
        if self.algorithms.is_empty() {
            return Err(invalid("no algorithms configured"));
        }
        let algs = self.resolved_algorithms()?;
        let mut labels: Vec<&str> = algs.iter().map(|a| a.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("algorithm labels must be unique"));
        }
        Ok(())
    }

    /// Algorithms with every unset step size expanded over `etas`. When more
    /// than one step size applies the label gains an `eta=` suffix.
    pub fn resolved_algorithms(&self) -> Result<Vec<ResolvedAlgorithm>> {
        let mut out = Vec::new();
        for spec in &self.algorithms {
            if spec.filter.is_kernel_trick() && spec.features.is_some() {
                return Err(invalid(format!("{}: kernel-trick filters take no feature map", spec.label)));
            }
            match spec.filter.eta() {
                Some(None) => {
                    if self.etas.is_empty() {
                        return Err(invalid(format!("{}: no step size and etas is empty", spec.label)));
                    }
                    for &eta in &self.etas {
                        let mut filter = spec.filter.clone();
                        filter.set_eta(eta);
                        let label = if self.etas.len() > 1 { format!("{} eta={eta}", spec.label) } else { spec.label.clone() };
                        out.push(ResolvedAlgorithm { label, filter, features: spec.features.clone(), index: out.len() });
                    }
                }
                _ => out.push(ResolvedAlgorithm {
                    label: spec.label.clone(),
                    filter: spec.filter.clone(),
                    features: spec.features.clone(),
                    index: out.len(),
                }),
            }
        }
        Ok(out)
    }

    /// Hex SHA-256 of the canonical JSON form, ignoring `threads` and `output_dir`.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.threads = 0;
        canonical.output_dir = None;
        let text = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub(crate) fn map_source(&self, alg: &ResolvedAlgorithm) -> Result<MapSource> {
        let Some(features) = &alg.features else { return Ok(MapSource::None) };
        let d = self.embedding_dim;
        if alg.map_varies_per_trial() {
            let base = match features {
                FeatureSpec::Gq { rule: rule @ (RuleSpec::Dense { .. } | RuleSpec::Sparse { .. }), .. } => Some(Arc::new(rule.build(d, 0)?)),
                _ => None,
            };
            Ok(MapSource::PerTrial { base })
        } else {
            let seed = super::derive_seed(self.master_seed, &[super::SEED_MAP, alg.index as u64]);
            Ok(MapSource::Fixed(Arc::new(features.build(d, self.sigma, seed, None)?)))
        }
    }
}
