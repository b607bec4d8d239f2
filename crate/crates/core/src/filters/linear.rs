use serde::{Deserialize, Serialize};

use super::{OnlineFilter, Prediction};
use crate::error::{check_dim, invalid, Result};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_forgetting(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("forgetting factor must lie in (0, 1], got {lambda}")))
    }
}

/// Least mean squares: `w <- w + eta * e * x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lms {
    weights: Vec<f64>,
    eta: f64,
}

impl Lms {
    pub fn new(dim: usize, eta: f64) -> Self {
        Self { weights: vec![0.0; dim], eta }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn step_size(&self) -> f64 {
        self.eta
    }
}

impl OnlineFilter for Lms {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.weights.len(), x.len())?;
        Ok(dot(&self.weights, x))
    }

    fn update(&mut self, x: &[f64], y: f64) -> Result<Prediction> {
        let p = Prediction::new(self.predict(x)?, y);
        let g = self.eta * p.error;
        self.weights.iter_mut().zip(x).for_each(|(w, v)| *w += g * v);
        Ok(p)
    }
}

/// Covariance state shared by the RLS variants. `p` is row-major `dim x dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RlsState {
    dim: usize,
    weights: Vec<f64>,
    p: Vec<f64>,
    lambda: f64,
    #[serde(skip)]
    pi: Vec<f64>,
}

impl RlsState {
    fn new(dim: usize, lambda: f64, delta: f64) -> Result<Self> {
        check_forgetting(lambda)?;
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid(format!("initial covariance scale must be positive, got {delta}")));
        }
        let mut p = vec![0.0; dim * dim];
        for i in 0..dim {
            p[i * dim + i] = delta;
        }
        Ok(Self { dim, weights: vec![0.0; dim], p, lambda, pi: vec![0.0; dim] })
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(dot(&self.weights, x))
    }

    /// Computes `pi = P x` and returns `lambda + x' P x`.
    fn gain_denominator(&mut self, x: &[f64]) -> f64 {
        let n = self.dim;
        self.pi.resize(n, 0.0);
        for (i, row) in self.p.chunks_exact(n).enumerate() {
            self.pi[i] = dot(row, x);
        }
        self.lambda + dot(x, &self.pi)
    }

    fn symmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            for j in i + 1..n {
                let v = 0.5 * (self.p[i * n + j] + self.p[j * n + i]);
                self.p[i * n + j] = v;
                self.p[j * n + i] = v;
            }
        }
    }

    fn max_asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.p[i * n + j] - self.p[j * n + i]).abs());
            }
        }
        worst
    }
}

/// Exponentially weighted recursive least squares, `P(0) = delta I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rls {
    state: RlsState,
}

impl Rls {
    pub fn new(dim: usize, lambda: f64, delta: f64) -> Result<Self> {
        Ok(Self { state: RlsState::new(dim, lambda, delta)? })
    }

    pub fn weights(&self) -> &[f64] {
        &self.state.weights
    }

    /// Row-major inverse covariance.
    pub fn inverse_covariance(&self) -> &[f64] {
        &self.state.p
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.state.max_asymmetry()
    }
}

impl OnlineFilter for Rls {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        self.state.predict(x)
    }

    fn update(&mut self, x: &[f64], y: f64) -> Result<Prediction> {
        let p = Prediction::new(self.state.predict(x)?, y);
        let s = &mut self.state;
        let n = s.dim;
        let denom = s.gain_denominator(x);
        let inv_lambda = 1.0 / s.lambda;
        // g = P x / denom, P <- (P - g (P x)') / lambda
        for i in 0..n {
            let gi = s.pi[i] / denom;
            s.weights[i] += gi * p.error;
            let row = &mut s.p[i * n..(i + 1) * n];
            for (pij, pj) in row.iter_mut().zip(&s.pi) {
                *pij = (*pij - gi * pj) * inv_lambda;
            }
        }
        s.symmetrize();
        Ok(p)
    }
}

/// Extended RLS with state transition `A = alpha I` and process noise `q I`:
///
/// ```text
/// g  = A P x / (lambda + x' P x)
/// P' = A (P / lambda - g x' P / lambda) A' + lambda q I
/// w' = A w + g e
/// ```
///
/// `alpha = 1, q = 0` reduces to [`Rls`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExRls {
    state: RlsState,
    alpha: f64,
    q: f64,
}

impl ExRls {
    pub fn new(dim: usize, lambda: f64, delta: f64, alpha: f64, q: f64) -> Result<Self> {
        if !alpha.is_finite() || !(q >= 0.0 && q.is_finite()) {
            return Err(invalid("transition scale must be finite and process noise non-negative"));
        }
        Ok(Self { state: RlsState::new(dim, lambda, delta)?, alpha, q })
    }

    pub fn weights(&self) -> &[f64] {
        &self.state.weights
    }

    pub fn inverse_covariance(&self) -> &[f64] {
        &self.state.p
    }
}

impl OnlineFilter for ExRls {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        self.state.predict(x)
    }

    fn update(&mut self, x: &[f64], y: f64) -> Result<Prediction> {
        let p = Prediction::new(self.state.predict(x)?, y);
        let (alpha, q) = (self.alpha, self.q);
        let s = &mut self.state;
        let n = s.dim;
        let denom = s.gain_denominator(x);
        let inv_lambda = 1.0 / s.lambda;
        let outer = alpha * alpha * inv_lambda;
        for i in 0..n {
            let gi = alpha * s.pi[i] / denom;
            s.weights[i] = alpha * s.weights[i] + gi * p.error;
            let row = &mut s.p[i * n..(i + 1) * n];
            for (pij, pj) in row.iter_mut().zip(&s.pi) {
                *pij = outer * (*pij - gi * pj);
            }
            row[i] += s.lambda * q;
        }
        s.symmetrize();
        Ok(p)
    }
}
