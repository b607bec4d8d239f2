//! Quadrature rules for the standard normal: Gauss-Hermite nodes, tensor and
//! Smolyak grids, NNLS weights for arbitrary nodes, and weighted subsampling.

use ntkaf::quadrature::{
    dense_grid_rule, gauss_hermite_nodes, nnls_weights, polynomial_exactness_check, sparse_grid_rule, sparse_level_for_degree,
    subsample_rule,
};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> ntkaf::Result<()> {
    let (t, w) = gauss_hermite_nodes(5)?;
    println!("5-point Gauss-Hermite rule");
    for (t, w) in t.iter().zip(&w) {
        println!("  node {t:>9.5}  weight {w:.6}");
    }

    println!("\nd = 7, exact to total degree 8");
    let dense = dense_grid_rule(7, 5)?;
    let sparse = sparse_grid_rule(7, sparse_level_for_degree(8))?;
    for (name, rule) in [("tensor grid", &dense), ("Smolyak grid", &sparse)] {
        println!(
            "  {name:13} {:>6} nodes, sum|w| = {:>8.2}, exactness error {:.1e}",
            rule.len(),
            rule.abs_weight_sum(),
            polynomial_exactness_check(rule, 8)
        );
    }

    let sub = subsample_rule(&dense, 165, 1)?;
    println!("  tensor grid subsampled to {} nodes: exactness error to degree 2 = {:.3}", sub.len(), polynomial_exactness_check(&sub, 2));

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let points: Vec<f64> = (0..100 * 2).map(|_| StandardNormal.sample(&mut rng)).collect();
    let fit = nnls_weights(2, &points, 4)?;
    let used = fit.weights().iter().filter(|w| **w > 0.0).count();
    println!("\nNNLS on 100 random 2-D nodes, moments to degree 4: residual {:.1e}, {used} nonzero weights", fit.residual);
    Ok(())
}
