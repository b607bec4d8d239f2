//! Empirical variance of the two random Fourier feature estimators against
//! their closed forms, over many independent draws.

use ntkaf::feature_maps::{build_rff1, build_rff2, gaussian_kernel, rff1_variance, rff2_variance};

fn main() -> ntkaf::Result<()> {
    let (dim, sigma, draws) = (64, 1.0, 2000u64);
    let x = [0.0; 3];
    println!("D = {dim}, sigma = {sigma}, {draws} draws");
    println!("{:>6}  {:>10}  {:>10}  {:>10}  {:>10}", "|d|", "RFF1 emp", "RFF1 law", "RFF2 emp", "RFF2 law");
    for r in [0.5, 0.75, 1.0, 1.25, 1.5] {
        let y = [r, 0.0, 0.0];
        let k = gaussian_kernel(&x, &y, sigma);
        let k2 = gaussian_kernel(&x, &[2.0 * r, 0.0, 0.0], sigma);
        let mut v = [0.0; 2];
        for seed in 0..draws {
            let e1 = build_rff1(3, dim, sigma, seed)?.kernel_estimate(&x, &y)? - k;
            let e2 = build_rff2(3, dim, sigma, seed)?.kernel_estimate(&x, &y)? - k;
            v[0] += e1 * e1;
            v[1] += e2 * e2;
        }
        println!(
            "{r:>6.2}  {:>10.5}  {:>10.5}  {:>10.5}  {:>10.5}",
            v[0] / draws as f64,
            rff1_variance(dim, k, k2),
            v[1] / draws as f64,
            rff2_variance(dim, k, k2)
        );
    }
    Ok(())
}
