//! Mackey-Glass series generation and the preprocessing used by the
//! prediction experiments.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Parameters of `dx/dt = beta x(t - tau) / (1 + x(t - tau)^n) - gamma x(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MgParams {
    pub beta: f64,
    pub gamma: f64,
    pub tau: f64,
    pub n_exponent: f64,
    pub sample_period: f64,
    pub x0: f64,
    /// RK4 step.
    pub step: f64,
    /// Samples discarded before the returned series starts.
    pub burn_in: usize,
}

impl Default for MgParams {
    fn default() -> Self {
        Self { beta: 0.2, gamma: 0.1, tau: 30.0, n_exponent: 10.0, sample_period: 6.0, x0: 0.9, step: 0.1, burn_in: 1000 }
    }
}

fn steps_per(span: f64, step: f64, what: &str) -> Result<usize> {
    let ratio = span / step;
    let rounded = ratio.round();
    if !ratio.is_finite() || (ratio - rounded).abs() > 1e-9 * ratio.abs().max(1.0) || rounded < 0.0 {
        return Err(invalid(format!("{what} ({span}) must be an integer multiple of the step ({step})")));
    }
    Ok(rounded as usize)
}

impl MgParams {
    fn validate(&self) -> Result<(usize, usize)> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(invalid("integration step must be positive"));
        }
        let delay = steps_per(self.tau, self.step, "tau")?;
        let period = steps_per(self.sample_period, self.step, "sample period")?;
        if period == 0 || delay == 0 {
            return Err(invalid("delay and sample period must each span at least one step"));
        }
        Ok((delay, period))
    }
}

/// Integrates the delay equation with classical RK4 and returns `n_samples`
/// values taken every `sample_period` after `burn_in` samples.
///
/// History before `t = 0` is constant `x0`. The delayed value at a half step
/// is the average of the two neighbouring stored grid values.
pub fn generate_mackey_glass(params: &MgParams, n_samples: usize) -> Result<Vec<f64>> {
    let (delay, period) = params.validate()?;
    if n_samples == 0 {
        return Ok(Vec::new());
    }
    let last_step = (params.burn_in + n_samples - 1) * period;
    let h = params.step;
    let MgParams { beta, gamma, n_exponent, x0, .. } = *params;
    let rhs = |x: f64, lagged: f64| beta * lagged / (1.0 + lagged.powf(n_exponent)) - gamma * x;
    let lagged_at = |traj: &[f64], k: usize| -> f64 {
        if k >= delay {
            traj[k - delay]
        } else {
            x0
        }
    };

    // trajectory[k] = x(k h)
    let mut trajectory = Vec::with_capacity(last_step + 1);
    trajectory.push(x0);
    let mut out = Vec::with_capacity(n_samples);
    for k in 0..=last_step {
        if k % period == 0 && k / period >= params.burn_in {
            out.push(trajectory[k]);
        }
        if k == last_step {
            break;
        }
        let x = trajectory[k];
        let lag_start = lagged_at(&trajectory, k);
        let lag_end = lagged_at(&trajectory, k + 1);
        let lag_mid = 0.5 * (lag_start + lag_end);

        let k1 = rhs(x, lag_start);
        let k2 = rhs(x + 0.5 * h * k1, lag_mid);
        let k3 = rhs(x + 0.5 * h * k2, lag_mid);
        let k4 = rhs(x + h * k3, lag_end);
        trajectory.push(x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    }
    Ok(out)
}

/// Constants used by [`standardize`], kept for inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub mean: f64,
    pub std: f64,
    pub max_abs: f64,
}

impl Scaling {
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std / self.max_abs
    }

    pub fn invert(&self, v: f64) -> f64 {
        v * self.max_abs * self.std + self.mean
    }
}

/// Subtract the mean, divide by the standard deviation, then divide by the
/// resulting maximum absolute value so the output lies in `[-1, 1]`.
pub fn standardize(series: &[f64]) -> Result<(Vec<f64>, Scaling)> {
    if series.len() < 2 {
        return Err(invalid("standardization needs at least two samples"));
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let std = (series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if !(std > 0.0) || !std.is_finite() {
        return Err(invalid("cannot standardize a constant series"));
    }
    let max_abs = series.iter().map(|v| ((v - mean) / std).abs()).fold(0.0, f64::max);
    let scaling = Scaling { mean, std, max_abs };
    Ok((series.iter().map(|&v| scaling.apply(v)).collect(), scaling))
}

/// Time-embedded one-step-ahead pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedDataset {
    pub dim: usize,
    /// Row-major, `targets.len()` rows of `dim` values.
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
    /// Series index of the first input sample.
    pub start: usize,
}

impl EmbeddedDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.inputs.chunks_exact(self.dim).zip(self.targets.iter().copied())
    }

    /// Series indices of the targets.
    pub fn target_indices(&self) -> std::ops::Range<usize> {
        self.start + self.dim..self.start + self.dim + self.len()
    }
}

/// Pair `i` has input `s[start+i .. start+i+d]` and target `s[start+i+d]`.
pub fn embed(series: &[f64], d: usize, start: usize, count: usize) -> Result<EmbeddedDataset> {
    if d == 0 {
        return Err(invalid("embedding dimension must be positive"));
    }
    if start + count + d > series.len() {
        return Err(invalid(format!(
            "embedding {count} pairs of dimension {d} from offset {start} needs {} samples, series has {}",
            start + count + d,
            series.len()
        )));
    }
    let mut inputs = Vec::with_capacity(count * d);
    for i in 0..count {
        inputs.extend_from_slice(&series[start + i..start + i + d]);
    }
    let targets = series[start + d..start + d + count].to_vec();
    Ok(EmbeddedDataset { dim: d, inputs, targets, start })
}

/// Adds white Gaussian noise at `snr_db` relative to the mean-square power of
/// `series`. An infinite SNR returns the series unchanged.
pub fn add_awgn(series: &[f64], snr_db: f64, seed: u64) -> Result<Vec<f64>> {
    if snr_db == f64::INFINITY {
        return Ok(series.to_vec());
    }
    if !snr_db.is_finite() {
        return Err(invalid("SNR must be finite or +infinity"));
    }
    if series.is_empty() {
        return Ok(Vec::new());
    }
    let power = series.iter().map(|v| v * v).sum::<f64>() / series.len() as f64;
    let noise_sd = (power * 10f64.powf(-snr_db / 10.0)).sqrt();
    let normal = Normal::new(0.0, noise_sd).map_err(|e| invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(series.iter().map(|v| v + normal.sample(&mut rng)).collect())
}

/// Single-column CSV with a `value` header.
pub fn write_series_csv<W: Write>(series: &[f64], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["value"])?;
    for v in series {
        wtr.write_record([format!("{v:e}")])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_series_csv<R: Read>(input: R) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(input);
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            let field = rec.get(0).ok_or_else(|| invalid("empty CSV row"))?;
            field.trim().parse::<f64>().map_err(|e| invalid(format!("bad value {field:?}: {e}")))
        })
        .collect()
}
