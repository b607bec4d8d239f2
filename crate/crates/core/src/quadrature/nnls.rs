use nalgebra::{DMatrix, DVector};

use super::{gaussian_moment, multi_indices, QuadratureRule};
use crate::error::{invalid, Result};

const TOLERANCE: f64 = 1e-10;

/// Lawson-Hanson active-set solver for `min ||A x - b||_2` subject to `x >= 0`.
///
/// Returns the solution and the residual norm. Rank-deficient systems are
/// handled through an SVD-based least-squares solve of each passive-set
/// subproblem, so a solution is always returned.
pub fn lawson_hanson(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let (m, n) = a.shape();
    assert_eq!(b.len(), m, "right-hand side length must match matrix rows");

    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let max_outer = 3 * n + 10;

    for _ in 0..max_outer {
        let residual = b - a * &x;
        let gradient = a.tr_mul(&residual);
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| gradient[i].total_cmp(&gradient[j]));
        let Some(t) = candidate else { break };
        if gradient[t] <= TOLERANCE {
            break;
        }
        passive[t] = true;

        loop {
            let cols: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let z = solve_subset(a, b, &cols);
            if cols.iter().zip(z.iter()).all(|(_, &v)| v > TOLERANCE) {
                x.fill(0.0);
                for (&j, &v) in cols.iter().zip(z.iter()) {
                    x[j] = v;
                }
                break;
            }
            // step back toward the feasible region
            let alpha = cols
                .iter()
                .zip(z.iter())
                .filter(|(_, &v)| v <= TOLERANCE)
                .map(|(&j, &v)| x[j] / (x[j] - v))
                .fold(f64::INFINITY, f64::min);
            let alpha = if alpha.is_finite() { alpha } else { 0.0 };
            for (&j, &v) in cols.iter().zip(z.iter()) {
                x[j] += alpha * (v - x[j]);
            }
            for &j in &cols {
                if x[j] <= TOLERANCE {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }

    let residual = (b - a * &x).norm();
    (x, residual)
}

fn solve_subset(a: &DMatrix<f64>, b: &DVector<f64>, cols: &[usize]) -> DVector<f64> {
    let sub = a.select_columns(cols);
    let svd = sub.svd(true, true);
    let eps = 1e-13 * svd.singular_values.max().max(1.0);
    svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(cols.len()))
}

/// Non-negative weights fitted by moment matching, with the residual norm of
/// the fit.
#[derive(Debug, Clone)]
pub struct NnlsFit {
    pub rule: QuadratureRule,
    pub residual: f64,
}

impl NnlsFit {
    pub fn weights(&self) -> &[f64] {
        self.rule.weights()
    }
}

/// Fits non-negative weights to `points` (row-major, dimension `d`) so that
/// the rule reproduces every Gaussian moment of total degree `<= max_degree`,
/// odd moments included. The system is solved in the least-squares sense;
/// the returned residual says how close to exact the fit is.
pub fn nnls_weights(d: usize, points: &[f64], max_degree: u32) -> Result<NnlsFit> {
    if d == 0 || points.is_empty() || points.len() % d != 0 {
        return Err(invalid("points must be a non-empty row-major array of d-dimensional points"));
    }
    if !points.iter().all(|v| v.is_finite()) {
        return Err(invalid("points contain NaN or infinite coordinates"));
    }
    let n = points.len() / d;
    let indices = multi_indices(d, max_degree);
    let a = DMatrix::from_fn(indices.len(), n, |row, col| {
        let x = &points[col * d..(col + 1) * d];
        indices[row].exponents().iter().zip(x).map(|(&k, &v)| v.powi(k as i32)).product()
    });
    let b = DVector::from_iterator(indices.len(), indices.iter().map(gaussian_moment));
    let (w, residual) = lawson_hanson(&a, &b);
    let rule = QuadratureRule::new(d, points.to_vec(), w.iter().copied().collect(), max_degree)?;
    Ok(NnlsFit { rule, residual })
}
