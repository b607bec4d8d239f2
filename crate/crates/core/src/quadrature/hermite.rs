use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Result};

/// Nodes and weights of the `m`-point Gauss-Hermite rule for the standard
/// normal density, so that `E[f(w)] ~ sum_i weights[i] * f(nodes[i])`.
///
/// Nodes are the eigenvalues of the Jacobi matrix of the probabilists'
/// Hermite recurrence `He_{k+1} = x He_k - k He_{k-1}` (Golub-Welsch).
/// Weights come from the Christoffel function evaluated at each node, which
/// keeps the tiny tail weights accurate in relative terms. The returned rule
/// is exactly symmetric: nodes are sorted ascending, mirrored pairs are
/// averaged, and the middle node of an odd rule is exactly zero.
pub fn gauss_hermite_nodes(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return Err(invalid("Gauss-Hermite rule needs at least one node"));
    }
    if m == 1 {
        return Ok((vec![0.0], vec![1.0]));
    }

    let jacobi = DMatrix::from_fn(m, m, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);

    for i in 0..m / 2 {
        let j = m - 1 - i;
        let t = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -t;
        nodes[j] = t;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }

    let mut weights: Vec<f64> = nodes.iter().map(|&t| 1.0 / christoffel_sum(t, m)).collect();
    for i in 0..m / 2 {
        let j = m - 1 - i;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);

    Ok((nodes, weights))
}

/// `sum_{k<m} p_k(t)^2` for the orthonormal Hermite polynomials `p_k`.
fn christoffel_sum(t: f64, m: usize) -> f64 {
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut sum = 1.0;
    for k in 0..m - 1 {
        let kf = k as f64;
        let next = (t * cur - kf.sqrt() * prev) / (kf + 1.0).sqrt();
        prev = cur;
        cur = next;
        sum += cur * cur;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moment(k: u32) -> f64 {
        if k % 2 == 1 {
            0.0
        } else {
            (1..k).step_by(2).map(f64::from).product()
        }
    }

    #[test]
    fn zero_nodes_rejected() {
        assert!(gauss_hermite_nodes(0).is_err());
    }

    #[test]
    fn small_rules() {
        assert_eq!(gauss_hermite_nodes(1).unwrap(), (vec![0.0], vec![1.0]));

        let (t, w) = gauss_hermite_nodes(2).unwrap();
        assert!((t[0] + 1.0).abs() < 1e-14 && (t[1] - 1.0).abs() < 1e-14);
        assert!((w[0] - 0.5).abs() < 1e-14 && (w[1] - 0.5).abs() < 1e-14);

        let (t, w) = gauss_hermite_nodes(3).unwrap();
        let fourth: f64 = t.iter().zip(&w).map(|(t, w)| w * t.powi(4)).sum();
        assert!((fourth - 3.0).abs() < 1e-12);
    }

    #[test]
    fn exact_up_to_2m_minus_1_and_not_beyond() {
        for m in 1..=25usize {
            let (t, w) = gauss_hermite_nodes(m).unwrap();
            assert!(w.iter().all(|&w| w > 0.0));
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for i in 0..m {
                assert_eq!(t[i], -t[m - 1 - i]);
            }
            for k in 0..=(2 * m as u32) {
                let q: f64 = t.iter().zip(&w).map(|(t, w)| w * t.powi(k as i32)).sum();
                let scale: f64 = t.iter().zip(&w).map(|(t, w)| w * t.abs().powi(k as i32)).sum();
                let err = (q - moment(k)).abs() / scale.max(1.0);
                if k < 2 * m as u32 {
                    assert!(err <= 1e-10, "m={m} k={k} err={err}");
                } else {
                    assert!(err > 1e-10, "m={m} unexpectedly exact at k={k}");
                }
            }
        }
    }

    #[test]
    fn stable_at_one_hundred_nodes() {
        let (t, w) = gauss_hermite_nodes(100).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let var: f64 = t.iter().zip(&w).map(|(t, w)| w * t * t).sum();
        assert!((var - 1.0).abs() < 1e-10);
    }
}
