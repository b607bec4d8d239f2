//! Online regressors sharing one streaming interface.
//!
//! The no-trick family ([`Lms`], [`Rls`], [`ExRls`]) is linear in whatever
//! vector it is fed; wrap it in [`NoTrick`] to run it on an explicit feature
//! map. The kernel-trick family ([`Klms`], [`Qklms`], [`FbQklms`], [`Krls`])
//! keeps a dictionary of past inputs and evaluates the Gaussian kernel
//! against it.

mod kernel;
mod linear;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use kernel::{Dictionary, FbQklms, Klms, Krls, Qklms, QuantizationMetric};
pub use linear::{ExRls, Lms, Rls};

use crate::error::Result;
use crate::feature_maps::FeatureMap;

/// Outcome of one training step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// Prediction made before the update.
    pub value: f64,
    /// A priori error `y - value`.
    pub error: f64,
}

impl Prediction {
    pub(crate) fn new(value: f64, target: f64) -> Self {
        Self { value, error: target - value }
    }
}

pub trait OnlineFilter {
    /// Output for `x` under the current state; zero before any training.
    fn predict(&self, x: &[f64]) -> Result<f64>;

    /// Predicts `x`, then adapts toward `y`.
    fn update(&mut self, x: &[f64], y: f64) -> Result<Prediction>;

    /// Number of stored centers, for dictionary-based filters.
    fn dictionary_size(&self) -> Option<usize> {
        None
    }
}

impl<F: OnlineFilter + ?Sized> OnlineFilter for Box<F> {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        (**self).predict(x)
    }

    fn update(&mut self, x: &[f64], y: f64) -> Result<Prediction> {
        (**self).update(x, y)
    }

    fn dictionary_size(&self) -> Option<usize> {
        (**self).dictionary_size()
    }
}

/// A linear filter applied to `z(x)` for a fixed feature map `z`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoTrick<F> {
    map: Arc<FeatureMap>,
    inner: F,
    #[serde(skip)]
    scratch: Vec<f64>,
}

impl<F: OnlineFilter> NoTrick<F> {
    pub fn new(map: Arc<FeatureMap>, inner: F) -> Self {
        let scratch = vec![0.0; map.output_dim()];
        Self { map, inner, scratch }
    }

    pub fn feature_map(&self) -> &FeatureMap {
        &self.map
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }
}

impl<F: OnlineFilter> OnlineFilter for NoTrick<F> {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        self.inner.predict(&self.map.map(x)?)
    }

    fn update(&mut self, x: &[f64], y: f64) -> Result<Prediction> {
        self.scratch.resize(self.map.output_dim(), 0.0);
        self.map.map_into(x, &mut self.scratch)?;
        self.inner.update(&self.scratch, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_maps::{build_taylor, gaussian_kernel, taylor_error_bound};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn untrained_filters_predict_zero() {
        let x = [0.3, -0.1];
        let map = Arc::new(build_taylor(2, 3, 1.0).unwrap());
        let filters: Vec<Box<dyn OnlineFilter>> = vec![
            Box::new(Lms::new(2, 0.1)),
            Box::new(Rls::new(2, 1.0, 10.0).unwrap()),
            Box::new(ExRls::new(2, 1.0, 10.0, 0.9, 0.01).unwrap()),
            Box::new(NoTrick::new(map, Lms::new(10, 0.1))),
            Box::new(Klms::new(2, 0.2, 1.0)),
            Box::new(Qklms::new(2, 0.2, 1.0, 0.1)),
            Box::new(FbQklms::new(2, 0.2, 1.0, 0.1, 5, 0.9).unwrap()),
            Box::new(Krls::new(2, 1.0, 0.1).unwrap()),
        ];
        for f in &filters {
            assert_eq!(f.predict(&x).unwrap(), 0.0);
        }
    }

    #[test]
    fn no_trick_klms_matches_kernel_klms() {
        // TS degree 12 makes the explicit kernel exact to ~1e-12 on this range
        let sigma = 1.0;
        let d = 2;
        let map = Arc::new(build_taylor(d, 12, sigma).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<Vec<f64>> = (0..200).map(|_| (0..d).map(|_| rng.random_range(-0.5..0.5)).collect()).collect();
        let bound = xs
            .iter()
            .flat_map(|a| xs.iter().map(move |b| taylor_error_bound(a, b, sigma, 12)))
            .fold(0.0, f64::max);
        assert!(bound < 1e-9);
        assert!((map.kernel_estimate(&xs[0], &xs[1]).unwrap() - gaussian_kernel(&xs[0], &xs[1], sigma)).abs() < 1e-9);

        let mut nt = NoTrick::new(map, Lms::new(91, 0.3));
        let mut kt = Klms::new(d, 0.3, sigma);
        for x in &xs {
            let y = (3.0 * x[0]).sin() * x[1].cos();
            let a = nt.update(x, y).unwrap();
            let b = kt.update(x, y).unwrap();
            assert!((a.value - b.value).abs() < 1e-6);
        }
    }
}
