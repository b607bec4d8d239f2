use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{weighted::WeightedIndex, Distribution};

use super::QuadratureRule;
use crate::error::{invalid, Error, Result};

/// Draws `target` nodes i.i.d. with probability `|a_i| / sum_j |a_j|` and gives
/// each draw the importance weight `sign(a_i) * sum_j |a_j| / target`, so the
/// subsampled rule is an unbiased estimate of the parent rule. Repeated draws
/// stay as separate nodes. The returned rule guarantees no polynomial degree.
pub fn subsample_rule(rule: &QuadratureRule, target: usize, seed: u64) -> Result<QuadratureRule> {
    if target == 0 {
        return Err(invalid("subsample target must be positive"));
    }
    let mass = rule.abs_weight_sum();
    if mass == 0.0 {
        return Err(invalid("cannot subsample a rule whose weights are all zero"));
    }
    let sampler = WeightedIndex::new(rule.weights().iter().map(|w| w.abs()))
        .map_err(|e| invalid(format!("bad subsampling distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let d = rule.dimension();
    let scale = mass / target as f64;
    let mut nodes = Vec::with_capacity(target * d);
    let mut weights = Vec::with_capacity(target);
    for _ in 0..target {
        let i = sampler.sample(&mut rng);
        nodes.extend_from_slice(rule.node(i));
        weights.push(rule.weights()[i].signum() * scale);
    }
    QuadratureRule::new(d, nodes, weights, 0)
}

/// Draws nodes like [`subsample_rule`] but merges repeated draws, continuing
/// until `target` distinct nodes have been seen. Node `i` drawn `c_i` times out
/// of `n` draws gets weight `sign(a_i) * c_i / n * sum_j |a_j|`.
pub fn subsample_rule_distinct(rule: &QuadratureRule, target: usize, seed: u64) -> Result<QuadratureRule> {
    if target == 0 {
        return Err(invalid("subsample target must be positive"));
    }
    let available = rule.weights().iter().filter(|w| **w != 0.0).count();
    if target > available {
        return Err(invalid(format!("cannot draw {target} distinct nodes from a rule with {available} nonzero weights")));
    }
    let mass = rule.abs_weight_sum();
    let sampler = WeightedIndex::new(rule.weights().iter().map(|w| w.abs()))
        .map_err(|e| invalid(format!("bad subsampling distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let max_draws = 1000 * target + 100_000;
    let mut order = Vec::with_capacity(target);
    let mut counts: HashMap<usize, usize> = HashMap::with_capacity(target);
    let mut draws = 0usize;
    while order.len() < target {
        if draws == max_draws {
            return Err(Error::ResourceLimit { what: "distinct subsampling draws", requested: draws as u128 + 1, cap: max_draws as u128 });
        }
        let i = sampler.sample(&mut rng);
        draws += 1;
        let c = counts.entry(i).or_insert(0);
        if *c == 0 {
            order.push(i);
        }
        *c += 1;
    }
    let d = rule.dimension();
    let mut nodes = Vec::with_capacity(target * d);
    let mut weights = Vec::with_capacity(target);
    for i in order {
        nodes.extend_from_slice(rule.node(i));
        weights.push(rule.weights()[i].signum() * counts[&i] as f64 * mass / draws as f64);
    }
    QuadratureRule::new(d, nodes, weights, 0)
}

/// Merges every node `w` with its mirror image `-w`, summing their weights.
/// Integrals of even functions such as `cos(w . u)` are unchanged; odd
/// moments are not, so the result claims no polynomial degree.
pub fn fold_mirror_nodes(rule: &QuadratureRule) -> Result<QuadratureRule> {
    let d = rule.dimension();
    let mut index: HashMap<Vec<u64>, usize> = HashMap::with_capacity(rule.len());
    let mut nodes: Vec<f64> = Vec::with_capacity(rule.len() * d);
    let mut weights: Vec<f64> = Vec::with_capacity(rule.len());
    for (x, &w) in rule.nodes().zip(rule.weights()) {
        let flip = x.iter().find(|v| **v != 0.0).is_some_and(|v| *v < 0.0);
        let canon: Vec<f64> = x.iter().map(|v| if flip { -v } else { *v } + 0.0).collect();
        let key: Vec<u64> = canon.iter().map(|v| v.to_bits()).collect();
        match index.get(&key) {
            Some(&k) => weights[k] += w,
            None => {
                index.insert(key, weights.len());
                nodes.extend_from_slice(&canon);
                weights.push(w);
            }
        }
    }
    QuadratureRule::new(d, nodes, weights, 0)
}
