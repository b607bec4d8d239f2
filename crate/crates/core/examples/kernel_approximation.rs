//! How well each explicit feature map reproduces the Gaussian kernel on
//! Mackey-Glass input windows, at matched feature dimension D = 330.

use ntkaf::data::{embed, generate_mackey_glass, standardize, MgParams};
use ntkaf::feature_maps::{build_gq, build_rff1, build_rff2, build_taylor, gaussian_kernel, FeatureMap};
use ntkaf::quadrature::dense_grid_rule;

fn rms_error(map: &FeatureMap, xs: &[&[f64]], sigma: f64) -> ntkaf::Result<f64> {
    let mut sum = 0.0;
    let mut n = 0;
    for (i, x) in xs.iter().enumerate() {
        for y in &xs[i + 1..] {
            let e = map.kernel_estimate(x, y)? - gaussian_kernel(x, y, sigma);
            sum += e * e;
            n += 1;
        }
    }
    Ok((sum / n as f64).sqrt())
}

fn main() -> ntkaf::Result<()> {
    let (series, _) = standardize(&generate_mackey_glass(&MgParams::default(), 2000)?)?;
    let data = embed(&series, 7, 0, 300)?;
    let xs: Vec<&[f64]> = (0..data.len()).map(|i| data.input(i)).collect();
    let grid = dense_grid_rule(7, 5)?;

    println!("{:>6}  {:>8}  {:>8}  {:>8}  {:>8}", "sigma", "RFF1", "RFF2", "GQ", "TS");
    for sigma in [0.5, std::f64::consts::FRAC_1_SQRT_2, 1.0, 2.0] {
        let maps = [
            build_rff1(7, 330, sigma, 1)?,
            build_rff2(7, 330, sigma, 1)?,
            build_gq(7, sigma, &grid, Some(165), Some(1))?,
            build_taylor(7, 4, sigma)?,
        ];
        print!("{sigma:>6.3}");
        for m in &maps {
            assert_eq!(m.output_dim(), 330);
            print!("  {:>8.4}", rms_error(m, &xs, sigma)?);
        }
        println!();
    }
    Ok(())
}
