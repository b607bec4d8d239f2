//! Explicit feature maps `z: R^d -> R^D` whose dot product is a positive
//! definite kernel approximating the Gaussian kernel
//! `k(x, x') = exp(-||x - x'||^2 / (2 sigma^2))`.
//!
//! Four constructions are provided:
//!
//! | kind   | features                                   | randomness            |
//! |--------|--------------------------------------------|-----------------------|
//! | `Rff1` | `sqrt(2/D) (sin w_i.x, cos w_i.x)` pairs    | `w_i ~ N(0, I/sigma^2)` |
//! | `Rff2` | `sqrt(2/D) cos(w_i.x + b_i)`                | also `b_i ~ U[0, 2pi]` |
//! | `Gq`   | `sqrt(a_i) (cos w_i.x, sin w_i.x)` pairs    | only via subsampling  |
//! | `Taylor` | scaled monomials of the truncated power series | none             |
//!
//! A built map is immutable; [`FeatureMap::map_into`] is pure and can be called
//! concurrently from any number of threads.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_finite, invalid, Error, Result};
use crate::quadrature::{binomial, check_cap, fold_mirror_nodes, multi_indices, subsample_rule, subsample_rule_distinct, MultiIndex, QuadratureRule};

/// Default cap on the number of Taylor monomials.
pub const DEFAULT_TAYLOR_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Rff1,
    Rff2,
    Gq,
    Taylor,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Rff1 => "RFF1",
            FeatureKind::Rff2 => "RFF2",
            FeatureKind::Gq => "GQ",
            FeatureKind::Taylor => "TS",
        })
    }
}

/// Kind-specific parameters. Frequencies are row-major `D' x d` and already
/// divided by the bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Params {
    Rff1 {
        frequencies: Vec<f64>,
    },
    Rff2 {
        frequencies: Vec<f64>,
        phases: Vec<f64>,
    },
    Gq {
        frequencies: Vec<f64>,
        amplitudes: Vec<f64>,
    },
    Taylor {
        degree: u32,
        monomials: Vec<MultiIndex>,
        /// `-|a| ln(sigma) - 0.5 * sum_l ln(a_l!)` per monomial.
        log_coefficients: Vec<f64>,
        /// Monomial `i > 0` equals monomial `parents[i].0` times `x[parents[i].1]`.
        parents: Vec<(u32, u32)>,
    },
}

/// A frozen explicit feature map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    input_dim: usize,
    output_dim: usize,
    bandwidth: f64,
    /// Seed the map was drawn with, when randomness was involved.
    seed: Option<u64>,
    #[serde(flatten)]
    params: Params,
}

fn check_bandwidth(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("bandwidth must be positive and finite, got {sigma}")))
    }
}

fn gaussian_frequencies(rng: &mut ChaCha8Rng, count: usize, d: usize, sigma: f64) -> Vec<f64> {
    (0..count * d)
        .map(|_| {
            let w: f64 = StandardNormal.sample(rng);
            w / sigma
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Random Fourier features with sin/cos pairs; `dim` must be even.
pub fn build_rff1(d: usize, dim: usize, sigma: f64, seed: u64) -> Result<FeatureMap> {
    check_bandwidth(sigma)?;
    if d == 0 || dim == 0 || dim % 2 != 0 {
        return Err(invalid(format!("RFF1 needs d >= 1 and an even positive dimension, got d={d} D={dim}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frequencies = gaussian_frequencies(&mut rng, dim / 2, d, sigma);
    Ok(FeatureMap { input_dim: d, output_dim: dim, bandwidth: sigma, seed: Some(seed), params: Params::Rff1 { frequencies } })
}

/// Random Fourier features with one phase-shifted cosine per frequency.
pub fn build_rff2(d: usize, dim: usize, sigma: f64, seed: u64) -> Result<FeatureMap> {
    check_bandwidth(sigma)?;
    if d == 0 || dim == 0 {
        return Err(invalid("RFF2 needs d >= 1 and D >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frequencies = gaussian_frequencies(&mut rng, dim, d, sigma);
    let phases = (0..dim).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    Ok(FeatureMap { input_dim: d, output_dim: dim, bandwidth: sigma, seed: Some(seed), params: Params::Rff2 { frequencies, phases } })
}

/// Quadrature features from a rule for `N(0, I)`. Nodes are scaled by
/// `1/sigma`. When `target` is given the rule is first subsampled to that many
/// nodes with `seed` (default 0). The rule that reaches the map must have
/// non-negative weights.
pub fn build_gq(d: usize, sigma: f64, rule: &QuadratureRule, target: Option<usize>, seed: Option<u64>) -> Result<FeatureMap> {
    check_bandwidth(sigma)?;
    check_dim(d, rule.dimension())?;
    match target {
        Some(t) => gq_from_rule(sigma, &subsample_rule(rule, t, seed.unwrap_or(0))?, Some(seed.unwrap_or(0))),
        None => gq_from_rule(sigma, rule, None),
    }
}

/// Quadrature features from `target` distinct nodes. Mirror-image nodes `w`
/// and `-w` give the same pair of features up to sign, so they are merged
/// first; nodes are then drawn by weight until `target` distinct ones have
/// been seen and repeated draws are folded into the weights.
pub fn build_gq_distinct(d: usize, sigma: f64, rule: &QuadratureRule, target: usize, seed: u64) -> Result<FeatureMap> {
    check_bandwidth(sigma)?;
    check_dim(d, rule.dimension())?;
    let folded = fold_mirror_nodes(rule)?;
    gq_from_rule(sigma, &subsample_rule_distinct(&folded, target, seed)?, Some(seed))
}

fn gq_from_rule(sigma: f64, rule: &QuadratureRule, seed: Option<u64>) -> Result<FeatureMap> {
    if let Some(w) = rule.weights().iter().find(|&&w| w < 0.0) {
        return Err(Error::ContractViolation(format!(
            "quadrature feature maps need non-negative weights (found {w}); subsample a signed rule with subsample_rule or refit it with nnls_weights"
        )));
    }
    let frequencies = rule.node_matrix().iter().map(|w| w / sigma).collect();
    let amplitudes = rule.weights().iter().map(|a| a.sqrt()).collect();
    Ok(FeatureMap { input_dim: rule.dimension(), output_dim: 2 * rule.len(), bandwidth: sigma, seed, params: Params::Gq { frequencies, amplitudes } })
}

/// Number of Taylor features for input dimension `d` and degree `r`: `C(d + r, r)`.
pub fn taylor_feature_count(d: usize, r: u32) -> u128 {
    binomial(d as u64 + r as u64, r as u64)
}

pub fn build_taylor(d: usize, r: u32, sigma: f64) -> Result<FeatureMap> {
    build_taylor_capped(d, r, sigma, DEFAULT_TAYLOR_CAP)
}

/// Taylor-series features: one feature per multi-index `a` with `|a| <= r`,
/// `z_a(x) = exp(-||x||^2 / (2 sigma^2)) x^a / (sigma^|a| sqrt(a!))`.
/// Monomials are in graded lexicographic order; coefficients are formed in
/// log space.
pub fn build_taylor_capped(d: usize, r: u32, sigma: f64, cap: usize) -> Result<FeatureMap> {
    check_bandwidth(sigma)?;
    if d == 0 {
        return Err(invalid("Taylor features need d >= 1"));
    }
    check_cap("Taylor monomials", taylor_feature_count(d, r), cap)?;

    let monomials = multi_indices(d, r);
    let ln_sigma = sigma.ln();
    let ln_fact = |k: u32| -> f64 { (2..=k).map(|j| f64::from(j).ln()).sum() };
    let log_coefficients = monomials
        .iter()
        .map(|a| -f64::from(a.total_degree()) * ln_sigma - 0.5 * a.exponents().iter().map(|&k| ln_fact(k)).sum::<f64>())
        .collect();

    let position: std::collections::HashMap<&MultiIndex, usize> = monomials.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut parents = vec![(0u32, 0u32)];
    for a in monomials.iter().skip(1) {
        let var = a.exponents().iter().position(|&k| k > 0).expect("non-constant monomial");
        let mut p = a.clone();
        p.0[var] -= 1;
        parents.push((position[&p] as u32, var as u32));
    }

    Ok(FeatureMap {
        input_dim: d,
        output_dim: monomials.len(),
        bandwidth: sigma,
        seed: None,
        params: Params::Taylor { degree: r, monomials, log_coefficients, parents },
    })
}

impl FeatureMap {
    pub fn kind(&self) -> FeatureKind {
        match self.params {
            Params::Rff1 { .. } => FeatureKind::Rff1,
            Params::Rff2 { .. } => FeatureKind::Rff2,
            Params::Gq { .. } => FeatureKind::Gq,
            Params::Taylor { .. } => FeatureKind::Taylor,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Monomials of a Taylor map, in feature order.
    pub fn monomials(&self) -> Option<&[MultiIndex]> {
        match &self.params {
            Params::Taylor { monomials, .. } => Some(monomials),
            _ => None,
        }
    }

    /// Quadrature weights `a_i` of a GQ map.
    pub fn quadrature_weights(&self) -> Option<Vec<f64>> {
        match &self.params {
            Params::Gq { amplitudes, .. } => Some(amplitudes.iter().map(|a| a * a).collect()),
            _ => None,
        }
    }

    pub fn map(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.output_dim];
        self.map_into(x, &mut out)?;
        Ok(out)
    }

    /// Writes `z(x)` into `out`, which must have length `output_dim()`.
    pub fn map_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.input_dim, x.len())?;
        check_dim(self.output_dim, out.len())?;
        check_finite(x, "feature map input")?;
        let d = self.input_dim;
        match &self.params {
            Params::Rff1 { frequencies } => {
                let scale = (2.0 / self.output_dim as f64).sqrt();
                for (w, pair) in frequencies.chunks_exact(d).zip(out.chunks_exact_mut(2)) {
                    let (s, c) = dot(w, x).sin_cos();
                    pair[0] = scale * s;
                    pair[1] = scale * c;
                }
            }
            Params::Rff2 { frequencies, phases } => {
                let scale = (2.0 / self.output_dim as f64).sqrt();
                for ((w, b), o) in frequencies.chunks_exact(d).zip(phases).zip(out.iter_mut()) {
                    *o = scale * (dot(w, x) + b).cos();
                }
            }
            Params::Gq { frequencies, amplitudes } => {
                for ((w, a), pair) in frequencies.chunks_exact(d).zip(amplitudes).zip(out.chunks_exact_mut(2)) {
                    let (s, c) = dot(w, x).sin_cos();
                    pair[0] = a * c;
                    pair[1] = a * s;
                }
            }
            Params::Taylor { log_coefficients, parents, .. } => {
                out[0] = 1.0;
                for i in 1..out.len() {
                    let (p, var) = parents[i];
                    out[i] = out[p as usize] * x[var as usize];
                }
                let envelope = -dot(x, x) / (2.0 * self.bandwidth * self.bandwidth);
                for (o, lc) in out.iter_mut().zip(log_coefficients) {
                    *o *= (envelope + lc).exp();
                }
            }
        }
        Ok(())
    }

    /// `z(x) . z(x')`.
    pub fn kernel_estimate(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(dot(&self.map(x)?, &self.map(y)?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// `exp(-||x - y||^2 / (2 sigma^2))`.
pub fn gaussian_kernel(x: &[f64], y: &[f64], sigma: f64) -> f64 {
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-sq / (2.0 * sigma * sigma)).exp()
}

/// The same kernel parameterized as `exp(-a ||x - y||^2)`.
pub fn gaussian_kernel_rate(x: &[f64], y: &[f64], a: f64) -> f64 {
    let sq: f64 = x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum();
    (-a * sq).exp()
}

/// Closed form of the degree-`r` truncated Taylor kernel,
/// `exp(-(||x||^2 + ||y||^2) / (2 sigma^2)) sum_{n<=r} (x.y / sigma^2)^n / n!`.
pub fn taylor_kernel(x: &[f64], y: &[f64], sigma: f64, r: u32) -> f64 {
    let s2 = sigma * sigma;
    let t = dot(x, y) / s2;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..=r {
        term *= t / f64::from(n);
        sum += term;
    }
    (-(dot(x, x) + dot(y, y)) / (2.0 * s2)).exp() * sum
}

/// Upper bound on `|k(x, y) - taylor_kernel(x, y, sigma, r)|`:
/// `(||x|| ||y|| / sigma^2)^(r+1) / (r+1)!`.
pub fn taylor_error_bound(x: &[f64], y: &[f64], sigma: f64, r: u32) -> f64 {
    let t = dot(x, x).sqrt() * dot(y, y).sqrt() / (sigma * sigma);
    (1..=r + 1).fold(1.0, |acc, n| acc * t / f64::from(n))
}

/// Uniform error bound for a non-negative quadrature rule exact to even
/// degree `r` on a region of diameter `diameter`, for a `b`-sub-Gaussian
/// spectral measure: `3 (e b^2 M^2 / R)^(R/2)`.
pub fn quadrature_error_bound(b: f64, diameter: f64, r: u32) -> f64 {
    let r = f64::from(r);
    3.0 * (std::f64::consts::E * b * b * diameter * diameter / r).powf(r / 2.0)
}

/// Closed-form variance of the RFF1 kernel estimate at lag `delta`.
pub fn rff1_variance(dim: usize, k_delta: f64, k_two_delta: f64) -> f64 {
    (1.0 + k_two_delta - 2.0 * k_delta * k_delta) / dim as f64
}

/// Closed-form variance of the RFF2 kernel estimate at lag `delta`.
pub fn rff2_variance(dim: usize, k_delta: f64, k_two_delta: f64) -> f64 {
    (1.0 + 0.5 * k_two_delta - k_delta * k_delta) / dim as f64
}
