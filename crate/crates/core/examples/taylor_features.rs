//! Taylor-series features: feature counts, agreement with the closed-form
//! truncated kernel, and the truncation error bound.

use ntkaf::feature_maps::{build_taylor, gaussian_kernel, taylor_error_bound, taylor_kernel};

fn main() -> ntkaf::Result<()> {
    for r in 1..=5 {
        println!("d = 7, degree {r}: D = {}", build_taylor(7, r, 1.0)?.output_dim());
    }
    let x = [0.3, -0.2, 0.9, 0.1, -0.7, 0.5, 0.0];
    let y = [0.1, 0.4, -0.6, 0.8, 0.2, -0.3, 0.6];
    println!("\nexact kernel {:.8}", gaussian_kernel(&x, &y, 1.0));
    for r in [2, 4, 6, 8] {
        let map = build_taylor(7, r, 1.0)?;
        let est = map.kernel_estimate(&x, &y)?;
        println!(
            "degree {r}: D = {:>5}, estimate {est:.8}, closed form {:.8}, error {:.1e} <= bound {:.1e}",
            map.output_dim(),
            taylor_kernel(&x, &y, 1.0, r),
            (est - gaussian_kernel(&x, &y, 1.0)).abs(),
            taylor_error_bound(&x, &y, 1.0, r)
        );
    }
    Ok(())
}
