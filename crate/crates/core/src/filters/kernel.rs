use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{OnlineFilter, Prediction};
use crate::error::{check_dim, invalid, Error, Result};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Centers with expansion coefficients, `f(x) = sum_i coef_i k(c_i, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dictionary {
    dim: usize,
    sigma: f64,
    /// Row-major centers.
    centers: Vec<f64>,
    coefficients: Vec<f64>,
}

impl Dictionary {
    pub fn new(dim: usize, sigma: f64) -> Self {
        Self { dim, sigma, centers: Vec::new(), coefficients: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    fn kernel_from_sq(&self, sq: f64) -> f64 {
        (-sq / (2.0 * self.sigma * self.sigma)).exp()
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self
            .centers
            .chunks_exact(self.dim)
            .zip(&self.coefficients)
            .map(|(c, a)| a * self.kernel_from_sq(sq_dist(c, x)))
            .sum())
    }

    /// Prediction plus the index and squared distance of the nearest center.
    fn evaluate_with_nearest(&self, x: &[f64]) -> Result<(f64, Option<(usize, f64)>)> {
        check_dim(self.dim, x.len())?;
        let mut value = 0.0;
        let mut nearest: Option<(usize, f64)> = None;
        for (i, (c, a)) in self.centers.chunks_exact(self.dim).zip(&self.coefficients).enumerate() {
            let sq = sq_dist(c, x);
            value += a * self.kernel_from_sq(sq);
            if nearest.is_none_or(|(_, best)| sq < best) {
                nearest = Some((i, sq));
            }
        }
        Ok((value, nearest))
    }

    fn push(&mut self, x: &[f64], coefficient: f64) {
        self.centers.extend_from_slice(x);
        self.coefficients.push(coefficient);
    }

    fn remove(&mut self, i: usize) {
        self.centers.drain(i * self.dim..(i + 1) * self.dim);
        self.coefficients.remove(i);
    }
}

/// Kernel LMS: every sample becomes a center with coefficient `eta * e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Klms {
    dict: Dictionary,
    eta: f64,
}

impl Klms {
    pub fn new(dim: usize, eta: f64, sigma: f64) -> Self {
        Self { dict: Dictionary::new(dim, sigma), eta }
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }
}

impl OnlineFilter for Klms {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        self.dict.evaluate(x)
    }

    fn update(&mut self, x: &[f64], y: f64) -> Result<Prediction> {
        let p = Prediction::new(self.dict.evaluate(x)?, y);
        self.dict.push(x, self.eta * p.error);
        Ok(p)
    }

    fn dictionary_size(&self) -> Option<usize> {
        Some(self.dict.len())
    }
}

/// How the quantization threshold is compared with the distance to the
/// nearest center.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantizationMetric {
    /// `||x - c|| <= q`
    #[default]
    Euclidean,
    /// `||x - c||^2 <= q`
    SquaredEuclidean,
}

impl QuantizationMetric {
    fn within(self, sq_dist: f64, q: f64) -> bool {
        match self {
            Self::Euclidean => sq_dist.sqrt() <= q,
            Self::SquaredEuclidean => sq_dist <= q,
        }
    }
}

/// Quantized KLMS: a sample within `q_factor` of its nearest center updates
/// that center's coefficient instead of adding a new one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Qklms {
    dict: Dictionary,
    eta: f64,
    q_factor: f64,
    #[serde(default)]
    metric: QuantizationMetric,
}

impl Qklms {
    pub fn new(dim: usize, eta: f64, sigma: f64, q_factor: f64) -> Self {
        Self { dict: Dictionary::new(dim, sigma), eta, q_factor, metric: QuantizationMetric::default() }
    }

    pub fn with_metric(mut self, metric: QuantizationMetric) -> Self {
        self.metric = metric;
        self
    }

    pub fn metric(&self) -> QuantizationMetric {
        self.metric
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    /// Returns the merged center index, or `None` when a center was added.
    fn step(&mut self, x: &[f64], y: f64) -> Result<(Prediction, Option<usize>)> {
        let (value, nearest) = self.dict.evaluate_with_nearest(x)?;
        let p = Prediction::new(value, y);
        let delta = self.eta * p.error;
        match nearest {
            Some((i, sq)) if self.metric.within(sq, self.q_factor) => {
                self.dict.coefficients[i] += delta;
                Ok((p, Some(i)))
            }
            _ => {
                self.dict.push(x, delta);
                Ok((p, None))
            }
        }
    }
}

impl OnlineFilter for Qklms {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        self.dict.evaluate(x)
    }

    fn update(&mut self, x: &[f64], y: f64) -> Result<Prediction> {
        Ok(self.step(x, y)?.0)
    }

    fn dictionary_size(&self) -> Option<usize> {
        Some(self.dict.len())
    }
}

/// Fixed-budget QKLMS. Each center carries a significance score: every step
/// all scores decay by `decay`, and a center whose coefficient changes has its
/// score reset to `|coefficient|`. When the dictionary exceeds `budget`, the
/// least significant center is discarded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbQklms {
    inner: Qklms,
    budget: usize,
    decay: f64,
    significance: Vec<f64>,
    discarded: usize,
}

impl FbQklms {
    pub fn new(dim: usize, eta: f64, sigma: f64, q_factor: f64, budget: usize, decay: f64) -> Result<Self> {
        if budget == 0 {
            return Err(invalid("budget must be at least one center"));
        }
        if !(decay > 0.0 && decay <= 1.0) {
            return Err(invalid(format!("significance decay must lie in (0, 1], got {decay}")));
        }
        Ok(Self { inner: Qklms::new(dim, eta, sigma, q_factor), budget, decay, significance: Vec::new(), discarded: 0 })
    }

    pub fn with_metric(mut self, metric: QuantizationMetric) -> Self {
        self.inner.metric = metric;
        self
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.inner.dict
    }

    pub fn significance(&self) -> &[f64] {
        &self.significance
    }

    /// Number of centers discarded so far.
    pub fn discarded(&self) -> usize {
        self.discarded
    }
}

impl OnlineFilter for FbQklms {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        self.inner.predict(x)
    }

    fn update(&mut self, x: &[f64], y: f64) -> Result<Prediction> {
        let (p, merged) = self.inner.step(x, y)?;
        self.significance.iter_mut().for_each(|s| *s *= self.decay);
        let coefs = &self.inner.dict.coefficients;
        match merged {
            Some(i) => self.significance[i] = coefs[i].abs(),
            None => self.significance.push(coefs[coefs.len() - 1].abs()),
        }
        if self.inner.dict.len() > self.budget {
            let victim = self
                .significance
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .expect("dictionary is non-empty");
            self.inner.dict.remove(victim);
            self.significance.remove(victim);
            self.discarded += 1;
        }
        Ok(p)
    }

    fn dictionary_size(&self) -> Option<usize> {
        Some(self.inner.dict.len())
    }
}

/// Kernel RLS with regularizer `lambda`. `q` holds `(lambda I + K)^{-1}` for
/// the current centers and is grown by the bordered-inverse update:
///
/// ```text
/// h = [k(c_i, x)], zeta = Q h, r = lambda + k(x, x) - zeta' h
/// Q' = [[Q + zeta zeta' / r, -zeta / r], [-zeta' / r, 1 / r]]
/// alpha' = [alpha - zeta e / r; e / r]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Krls {
    dict: Dictionary,
    regularizer: f64,
    q: DMatrix<f64>,
}

impl Krls {
    pub fn new(dim: usize, sigma: f64, regularizer: f64) -> Result<Self> {
        if !(regularizer > 0.0 && regularizer.is_finite()) {
            return Err(invalid("KRLS regularizer must be positive"));
        }
        Ok(Self { dict: Dictionary::new(dim, sigma), regularizer, q: DMatrix::zeros(0, 0) })
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    /// Current `(lambda I + K)^{-1}`.
    pub fn inverse_gram(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn regularizer(&self) -> f64 {
        self.regularizer
    }
}

impl OnlineFilter for Krls {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        self.dict.evaluate(x)
    }

    fn update(&mut self, x: &[f64], y: f64) -> Result<Prediction> {
        check_dim(self.dict.dim, x.len())?;
        let n = self.dict.len();
        let h = DVector::from_iterator(n, (0..n).map(|i| self.dict.kernel_from_sq(sq_dist(self.dict.center(i), x))));
        let p = Prediction::new(h.dot(&DVector::from_column_slice(&self.dict.coefficients)), y);
        let zeta = &self.q * &h;
        // k(x, x) = 1 for the Gaussian kernel
        let r = self.regularizer + 1.0 - zeta.dot(&h);
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::NumericalBreakdown(format!("KRLS innovation variance {r} is not positive; increase the regularizer")));
        }
        let inv_r = 1.0 / r;

        let mut q = DMatrix::zeros(n + 1, n + 1);
        q.view_mut((0, 0), (n, n)).copy_from(&(&self.q + &zeta * zeta.transpose() * inv_r));
        for i in 0..n {
            q[(i, n)] = -zeta[i] * inv_r;
            q[(n, i)] = -zeta[i] * inv_r;
        }
        q[(n, n)] = inv_r;
        self.q = q;

        let step = p.error * inv_r;
        for (a, z) in self.dict.coefficients.iter_mut().zip(zeta.iter()) {
            *a -= z * step;
        }
        self.dict.push(x, step);
        Ok(p)
    }

    fn dictionary_size(&self) -> Option<usize> {
        Some(self.dict.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_maps::gaussian_kernel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn stream(n: usize, d: usize, seed: u64) -> Vec<(Vec<f64>, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y = (2.0 * x[0]).sin() + 0.5 * x[d - 1] * x[0];
                (x, y)
            })
            .collect()
    }

    #[test]
    fn klms_grows_one_center_per_sample() {
        let mut f = Klms::new(3, 0.5, 1.0);
        let data = stream(50, 3, 1);
        let first = f.update(&data[0].0, data[0].1).unwrap();
        assert_eq!(first.error, data[0].1);
        for (i, (x, y)) in data.iter().enumerate().skip(1) {
            let before = f.predict(x).unwrap();
            let p = f.update(x, *y).unwrap();
            assert_eq!(p.value, before);
            assert_eq!(p.error, y - p.value);
            assert_eq!(f.dictionary_size(), Some(i + 1));
        }
    }

    #[test]
    fn qklms_limits() {
        let data = stream(100, 2, 2);
        let mut merge_all = Qklms::new(2, 0.3, 1.0, f64::INFINITY);
        let mut merge_none = Qklms::new(2, 0.3, 1.0, 0.0);
        let mut klms = Klms::new(2, 0.3, 1.0);
        for (x, y) in &data {
            merge_all.update(x, *y).unwrap();
            let a = merge_none.update(x, *y).unwrap();
            let b = klms.update(x, *y).unwrap();
            assert_eq!(a, b);
        }
        assert_eq!(merge_all.dictionary_size(), Some(1));
        assert_eq!(merge_none.dictionary_size(), Some(100));
    }

    #[test]
    fn qklms_centers_are_separated() {
        let q = 0.3;
        for metric in [QuantizationMetric::Euclidean, QuantizationMetric::SquaredEuclidean] {
            let mut f = Qklms::new(2, 0.3, 1.0, q).with_metric(metric);
            for (x, y) in stream(500, 2, 3) {
                f.update(&x, y).unwrap();
            }
            let dict = f.dictionary();
            for i in 0..dict.len() {
                for j in 0..i {
                    assert!(!metric.within(sq_dist(dict.center(i), dict.center(j)), q));
                }
            }
        }
    }

    #[test]
    fn squared_metric_matches_euclidean_at_squared_threshold() {
        let data = stream(300, 3, 7);
        let mut a = Qklms::new(3, 0.3, 1.0, 0.25).with_metric(QuantizationMetric::SquaredEuclidean);
        let mut b = Qklms::new(3, 0.3, 1.0, 0.5);
        for (x, y) in &data {
            assert_eq!(a.update(x, *y).unwrap(), b.update(x, *y).unwrap());
        }
        assert_eq!(a.dictionary_size(), b.dictionary_size());
    }

    #[test]
    fn fbqklms_respects_budget() {
        let data = stream(300, 2, 4);
        for budget in [1usize, 5, 20] {
            let mut f = FbQklms::new(2, 0.3, 1.0, 0.05, budget, 0.9).unwrap();
            for (x, y) in &data {
                f.update(x, *y).unwrap();
                assert!(f.dictionary_size().unwrap() <= budget);
                assert_eq!(f.significance().len(), f.dictionary_size().unwrap());
            }
            assert!(f.discarded() > 0);
        }
        assert!(FbQklms::new(2, 0.3, 1.0, 0.05, 0, 0.9).is_err());
        assert!(FbQklms::new(2, 0.3, 1.0, 0.05, 3, 0.0).is_err());
    }

    #[test]
    fn fbqklms_unbounded_budget_is_qklms() {
        let data = stream(200, 3, 5);
        let mut a = FbQklms::new(3, 0.3, 0.8, 0.2, usize::MAX, 0.9).unwrap();
        let mut b = Qklms::new(3, 0.3, 0.8, 0.2);
        for (x, y) in &data {
            assert_eq!(a.update(x, *y).unwrap(), b.update(x, *y).unwrap());
        }
        assert_eq!(a.dictionary(), b.dictionary());
    }

    #[test]
    fn krls_first_coefficient() {
        let mut f = Krls::new(2, 1.0, 0.1).unwrap();
        f.update(&[0.2, 0.4], 2.0).unwrap();
        assert!((f.dictionary().coefficients()[0] - 2.0 / 1.1).abs() < 1e-15);
        assert!(Krls::new(2, 1.0, 0.0).is_err());
    }

    #[test]
    fn krls_matches_batch_solution() {
        let (reg, sigma) = (0.1, 0.7);
        let data = stream(120, 3, 6);
        let mut f = Krls::new(3, sigma, reg).unwrap();
        for (x, y) in &data {
            f.update(x, *y).unwrap();
        }
        let n = data.len();
        let gram = DMatrix::from_fn(n, n, |i, j| gaussian_kernel(&data[i].0, &data[j].0, sigma));
        let a = DMatrix::identity(n, n) * reg + &gram;
        let y = DVector::from_iterator(n, data.iter().map(|d| d.1));
        let alpha = a.clone().lu().solve(&y).unwrap();
        for (got, want) in f.dictionary().coefficients().iter().zip(alpha.iter()) {
            assert!((got - want).abs() < 1e-8);
        }
        let dev = (f.inverse_gram() * a - DMatrix::<f64>::identity(n, n)).abs().max();
        assert!(dev < 1e-6);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut f = Krls::new(2, 1.0, 0.5).unwrap();
        for (x, y) in stream(10, 2, 7) {
            f.update(&x, y).unwrap();
        }
        let json = serde_json::to_string(&f).unwrap();
        let back: Krls = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
    }
}
