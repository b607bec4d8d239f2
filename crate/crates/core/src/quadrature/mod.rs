//! Quadrature rules for the standard normal spectral measure `N(0, I_d)`.
//!
//! Every rule here approximates `E[f(w)]` for `w ~ N(0, I_d)` by a weighted
//! sum over nodes. The kernel bandwidth is not part of a rule; feature maps
//! rescale the nodes when they are built.

mod grid;
mod hermite;
mod nnls;
mod subsample;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use grid::{dense_grid_rule, dense_grid_rule_capped, sparse_grid_rule, sparse_grid_rule_capped, sparse_level_for_degree};
pub use hermite::gauss_hermite_nodes;
pub use nnls::{lawson_hanson, nnls_weights, NnlsFit};
pub use subsample::{fold_mirror_nodes, subsample_rule, subsample_rule_distinct};

/// Default cap on the number of nodes any grid construction may produce.
pub const DEFAULT_NODE_CAP: usize = 10_000_000;

/// A multi-index `r = (r_1, ..., r_d)` naming the monomial `prod_l w_l^{r_l}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }
}

/// All multi-indices in `d` variables with total degree at most `max_degree`,
/// in graded lexicographic order: by total degree, then lexicographically
/// descending within each degree (so `(1,0)` precedes `(0,1)`).
pub fn multi_indices(d: usize, max_degree: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut current = vec![0u32; d];
    for degree in 0..=max_degree {
        fill_degree(&mut current, 0, degree, &mut out);
    }
    out
}

fn fill_degree(current: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(MultiIndex(current.to_vec()));
        current[pos] = 0;
        return;
    }
    if current.is_empty() {
        out.push(MultiIndex(Vec::new()));
        return;
    }
    for k in (0..=remaining).rev() {
        current[pos] = k;
        fill_degree(current, pos + 1, remaining - k, out);
    }
    current[pos] = 0;
}

/// `k`-th moment of `N(0, 1)`: zero for odd `k`, `(k-1)!!` for even `k`.
pub fn normal_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        (1..k).step_by(2).map(f64::from).product()
    }
}

/// `E[prod_l w_l^{r_l}]` for `w ~ N(0, I_d)`.
pub fn gaussian_moment(r: &MultiIndex) -> f64 {
    r.0.iter().map(|&k| normal_moment(k)).product()
}

/// Nodes and weights approximating a Gaussian-weighted integral in `d`
/// dimensions. Weights may be negative (sparse grids); feature maps require
/// non-negative weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    dimension: usize,
    /// Row-major, `len() == weights.len() * dimension`.
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Total polynomial degree the construction guarantees to integrate exactly.
    degree: u32,
}

impl QuadratureRule {
    pub fn new(dimension: usize, nodes: Vec<f64>, weights: Vec<f64>, degree: u32) -> Result<Self> {
        if dimension == 0 {
            return Err(invalid("quadrature rule dimension must be positive"));
        }
        if weights.is_empty() {
            return Err(invalid("quadrature rule needs at least one node"));
        }
        if nodes.len() != weights.len() * dimension {
            return Err(invalid(format!(
                "{} node coordinates do not describe {} nodes in dimension {}",
                nodes.len(),
                weights.len(),
                dimension
            )));
        }
        if !nodes.iter().chain(&weights).all(|v| v.is_finite()) {
            return Err(invalid("quadrature rule contains non-finite values"));
        }
        Ok(Self { dimension, nodes, weights, degree })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.nodes.chunks_exact(self.dimension)
    }

    /// Row-major node coordinates.
    pub fn node_matrix(&self) -> &[f64] {
        &self.nodes
    }

    pub fn is_non_negative(&self) -> bool {
        self.weights.iter().all(|&w| w >= 0.0)
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn abs_weight_sum(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    /// Applies the rule to `f`.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        self.nodes().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    /// Same nodes, new weights; the guaranteed degree is cleared to `degree`.
    pub fn with_weights(&self, weights: Vec<f64>, degree: u32) -> Result<Self> {
        Self::new(self.dimension, self.nodes.clone(), weights, degree)
    }

    /// Debug dump: one row per node, columns `w_1..w_d,weight`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.dimension).map(|l| format!("w_{l}")).collect();
        header.push("weight".into());
        wtr.write_record(&header)?;
        for (x, w) in self.nodes().zip(&self.weights) {
            let row: Vec<String> = x.iter().chain(std::iter::once(w)).map(|v| format!("{v:e}")).collect();
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Per-node table `powers[i][l][k] = w_{i,l}^k` for `k <= max_degree`, flattened.
fn power_table(rule: &QuadratureRule, max_degree: u32) -> Vec<f64> {
    let stride = max_degree as usize + 1;
    let mut table = vec![1.0; rule.len() * rule.dimension() * stride];
    for (i, x) in rule.nodes().enumerate() {
        for (l, &v) in x.iter().enumerate() {
            let base = (i * rule.dimension() + l) * stride;
            for k in 1..stride {
                table[base + k] = table[base + k - 1] * v;
            }
        }
    }
    table
}

/// Largest absolute moment error of `rule` over all multi-indices of total
/// degree at most `max_degree`.
pub fn polynomial_exactness_check(rule: &QuadratureRule, max_degree: u32) -> f64 {
    let d = rule.dimension();
    let stride = max_degree as usize + 1;
    let table = power_table(rule, max_degree);
    multi_indices(d, max_degree)
        .iter()
        .map(|r| {
            let approx: f64 = rule
                .weights()
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let base = i * d * stride;
                    w * r.0.iter().enumerate().map(|(l, &k)| table[base + l * stride + k as usize]).product::<f64>()
                })
                .sum();
            (approx - gaussian_moment(r)).abs()
        })
        .fold(0.0, f64::max)
}

pub(crate) fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

pub(crate) fn check_cap(what: &'static str, requested: u128, cap: usize) -> Result<()> {
    if requested > cap as u128 {
        Err(Error::ResourceLimit { what, requested, cap: cap as u128 })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments() {
        assert_eq!(gaussian_moment(&MultiIndex(vec![0, 0])), 1.0);
        assert_eq!(gaussian_moment(&MultiIndex(vec![2, 0])), 1.0);
        assert_eq!(gaussian_moment(&MultiIndex(vec![4, 2])), 3.0);
        assert_eq!(gaussian_moment(&MultiIndex(vec![3, 2])), 0.0);
        assert_eq!(normal_moment(8), 105.0);
    }

    #[test]
    fn graded_lex_enumeration() {
        let idx = multi_indices(2, 2);
        let expected = [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]];
        assert_eq!(idx.len(), expected.len());
        for (a, b) in idx.iter().zip(expected) {
            assert_eq!(a.exponents(), &b);
        }
        for (d, r) in [(7usize, 4u32), (3, 6), (1, 5), (7, 5)] {
            let idx = multi_indices(d, r);
            assert_eq!(idx.len() as u128, binomial((d as u64) + r as u64, r as u64));
            let unique: std::collections::HashSet<_> = idx.iter().collect();
            assert_eq!(unique.len(), idx.len());
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(11, 4), 330);
        assert_eq!(binomial(12, 5), 792);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn exactness_of_single_origin_node() {
        let rule = QuadratureRule::new(1, vec![0.0], vec![1.0], 1).unwrap();
        assert_eq!(polynomial_exactness_check(&rule, 0), 0.0);
        assert_eq!(polynomial_exactness_check(&rule, 2), 1.0);
    }

    #[test]
    fn rejects_malformed_rules() {
        assert!(QuadratureRule::new(2, vec![0.0; 3], vec![1.0], 0).is_err());
        assert!(QuadratureRule::new(1, vec![], vec![], 0).is_err());
        assert!(QuadratureRule::new(1, vec![f64::NAN], vec![1.0], 0).is_err());
    }

    #[test]
    fn csv_dump_has_one_row_per_node() {
        let rule = dense_grid_rule(2, 2).unwrap();
        let mut buf = Vec::new();
        rule.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "w_1,w_2,weight");
        assert_eq!(lines.len(), 5);
    }
}
