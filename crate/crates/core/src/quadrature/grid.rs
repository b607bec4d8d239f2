use std::collections::BTreeMap;

use super::{binomial, check_cap, gauss_hermite_nodes, QuadratureRule, DEFAULT_NODE_CAP};
use crate::error::{invalid, Result};

/// Coordinates closer than this are treated as the same node when merging.
const MERGE_TOLERANCE: f64 = 1e-12;

/// Tensor product of `d` copies of the `m`-point Gauss-Hermite rule.
pub fn dense_grid_rule(d: usize, m: usize) -> Result<QuadratureRule> {
    dense_grid_rule_capped(d, m, DEFAULT_NODE_CAP)
}

pub fn dense_grid_rule_capped(d: usize, m: usize, cap: usize) -> Result<QuadratureRule> {
    if d == 0 || m == 0 {
        return Err(invalid("dense grid needs d >= 1 and m >= 1"));
    }
    let count = (m as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    check_cap("dense grid nodes", count, cap)?;
    let count = count as usize;

    let (t, w) = gauss_hermite_nodes(m)?;
    let mut nodes = Vec::with_capacity(count * d);
    let mut weights = Vec::with_capacity(count);
    let mut digits = vec![0usize; d];
    for _ in 0..count {
        nodes.extend(digits.iter().map(|&k| t[k]));
        weights.push(digits.iter().map(|&k| w[k]).product());
        // odometer, last coordinate fastest
        for pos in (0..d).rev() {
            digits[pos] += 1;
            if digits[pos] < m {
                break;
            }
            digits[pos] = 0;
        }
    }
    QuadratureRule::new(d, nodes, weights, (2 * m - 1) as u32)
}

/// Smallest Smolyak level whose rule is exact for total degree `degree`.
pub fn sparse_level_for_degree(degree: u32) -> usize {
    (degree as usize + 2) / 2
}

/// Smolyak sparse grid built from the Gauss-Hermite rules `U_l` with `l`
/// points at level `l`. Level `L` in `d` dimensions combines the tensor rules
/// `U_{i_1} x ... x U_{i_d}` with `d <= |i| - d + 1 <= L` using the classical
/// coefficients `(-1)^{q-|i|} C(d-1, q-|i|)`, `q = d + L - 1`. Coincident
/// nodes are merged by summing weights, so weights may be negative.
///
/// The result integrates every monomial of total degree `<= 2L - 1` exactly.
pub fn sparse_grid_rule(d: usize, level: usize) -> Result<QuadratureRule> {
    sparse_grid_rule_capped(d, level, DEFAULT_NODE_CAP)
}

pub fn sparse_grid_rule_capped(d: usize, level: usize, cap: usize) -> Result<QuadratureRule> {
    if d == 0 || level == 0 {
        return Err(invalid("sparse grid needs d >= 1 and level >= 1"));
    }
    let q = d + level - 1;
    let rules: Vec<(Vec<f64>, Vec<f64>)> = (1..=level).map(gauss_hermite_nodes).collect::<Result<_>>()?;

    let mut combos = Vec::new();
    let mut raw_count: u128 = 0;
    let mut index = vec![1usize; d];
    collect_levels(&mut index, 0, level - 1, &mut |i| {
        let norm: usize = i.iter().sum();
        if norm + d > q {
            let gap = (q - norm) as u64;
            let coeff = binomial(d as u64 - 1, gap) as f64 * if gap % 2 == 0 { 1.0 } else { -1.0 };
            raw_count += i.iter().map(|&l| l as u128).product::<u128>();
            combos.push((i.to_vec(), coeff));
        }
    });
    check_cap("sparse grid nodes", raw_count, cap)?;

    let mut merged: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    let mut nodes: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut point = vec![0.0; d];
    for (levels, coeff) in &combos {
        let total: usize = levels.iter().product();
        let mut digits = vec![0usize; d];
        for _ in 0..total {
            let mut w = *coeff;
            for l in 0..d {
                let (t, wt) = &rules[levels[l] - 1];
                point[l] = t[digits[l]];
                w *= wt[digits[l]];
            }
            let key: Vec<i64> = point.iter().map(|v| (v / MERGE_TOLERANCE).round() as i64).collect();
            match merged.get(&key) {
                Some(&idx) => weights[idx] += w,
                None => {
                    merged.insert(key, weights.len());
                    nodes.extend_from_slice(&point);
                    weights.push(w);
                }
            }
            for pos in (0..d).rev() {
                digits[pos] += 1;
                if digits[pos] < levels[pos] {
                    break;
                }
                digits[pos] = 0;
            }
        }
    }

    // drop nodes whose contributions cancelled exactly
    let keep: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] != 0.0).collect();
    let nodes = keep.iter().flat_map(|&i| nodes[i * d..(i + 1) * d].iter().copied()).collect();
    let weights = keep.iter().map(|&i| weights[i]).collect();
    QuadratureRule::new(d, nodes, weights, (2 * level - 1) as u32)
}

/// Visits every level vector `i >= 1` with `sum(i - 1) <= budget`.
fn collect_levels(index: &mut [usize], pos: usize, budget: usize, visit: &mut impl FnMut(&[usize])) {
    if pos == index.len() {
        visit(index);
        return;
    }
    for extra in 0..=budget {
        index[pos] = 1 + extra;
        collect_levels(index, pos + 1, budget - extra, visit);
    }
    index[pos] = 1;
}

#[cfg(test)]
mod tests {
    use super::super::{multi_indices, polynomial_exactness_check};
    use super::*;

    #[test]
    fn dense_two_by_two() {
        let rule = dense_grid_rule(2, 2).unwrap();
        assert_eq!(rule.len(), 4);
        for (x, &w) in rule.nodes().zip(rule.weights()) {
            assert!(x.iter().all(|v| (v.abs() - 1.0).abs() < 1e-14));
            assert!((w - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn dense_one_dimension_is_base_rule() {
        let rule = dense_grid_rule(1, 3).unwrap();
        let (t, w) = gauss_hermite_nodes(3).unwrap();
        assert_eq!(rule.node_matrix(), &t[..]);
        assert_eq!(rule.weights(), &w[..]);
    }

    #[test]
    fn dense_weights_positive_and_normalized() {
        for (d, m) in [(2, 3), (3, 4), (4, 2)] {
            let rule = dense_grid_rule(d, m).unwrap();
            assert!(rule.is_non_negative());
            assert!((rule.weight_sum() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn dense_exactness() {
        let rule = dense_grid_rule(3, 2).unwrap();
        let m = rule.integrate(|x| x[0] * x[0] * x[1] * x[1] * x[2] * x[2]);
        assert!((m - 1.0).abs() < 1e-12);
        assert!(polynomial_exactness_check(&dense_grid_rule(2, 3).unwrap(), 4) <= 1e-10);
    }

    #[test]
    fn dense_cap_enforced() {
        assert!(matches!(
            dense_grid_rule_capped(7, 10, 1000),
            Err(crate::Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn sparse_one_dimension_is_base_rule() {
        for level in 1..=6 {
            let rule = sparse_grid_rule(1, level).unwrap();
            let (t, w) = gauss_hermite_nodes(level).unwrap();
            assert_eq!(rule.len(), level);
            let mut got: Vec<(f64, f64)> = rule.nodes().map(|x| x[0]).zip(rule.weights().iter().copied()).collect();
            got.sort_by(|a, b| a.0.total_cmp(&b.0));
            for ((gt, gw), (et, ew)) in got.iter().zip(t.iter().zip(&w)) {
                assert_eq!(gt, et);
                assert!((gw - ew).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sparse_level_two_in_two_dimensions_is_cubic_exact() {
        let rule = sparse_grid_rule(2, 2).unwrap();
        assert!(polynomial_exactness_check(&rule, 3) <= 1e-10);
    }

    #[test]
    fn sparse_exactness_matches_declared_degree() {
        for (d, level) in [(2, 3), (3, 4), (5, 3), (7, 3)] {
            let rule = sparse_grid_rule(d, level).unwrap();
            let degree = rule.degree();
            assert_eq!(degree as usize, 2 * level - 1);
            assert!(polynomial_exactness_check(&rule, degree) <= 1e-9, "d={d} level={level}");
            assert!((rule.weight_sum() - 1.0).abs() < 1e-10);
        }
        assert_eq!(multi_indices(2, 3).len(), 10);
    }

    #[test]
    fn level_for_degree() {
        assert_eq!(sparse_level_for_degree(8), 5);
        assert_eq!(sparse_level_for_degree(9), 5);
        assert_eq!(sparse_level_for_degree(3), 2);
        assert_eq!(sparse_level_for_degree(0), 1);
    }

    #[test]
    fn sparse_beats_dense_in_seven_dimensions() {
        let level = sparse_level_for_degree(8);
        let sparse = sparse_grid_rule(7, level).unwrap();
        let dense_points = (level as u64).pow(7);
        assert!((sparse.len() as u64) < dense_points);
    }
}
