//! Gram-matrix eigenspectra on Mackey-Glass windows: the exact Gaussian kernel
//! against D = 120 feature maps. Prints numerical ranks and the share of the
//! spectrum held by the leading D/2 eigenvalues.

use ntkaf::analysis::{eigenspectrum, energy_fraction, gram_matrix, numerical_rank, KernelSource};
use ntkaf::data::{embed, generate_mackey_glass, standardize, MgParams};
use ntkaf::feature_maps::{build_gq, build_rff1, build_rff2, build_taylor};
use ntkaf::quadrature::dense_grid_rule;

fn main() -> ntkaf::Result<()> {
    let (series, _) = standardize(&generate_mackey_glass(&MgParams::default(), 2000)?)?;
    let data = embed(&series, 7, 0, 500)?;
    let sigma = 1.0;

    let exact = eigenspectrum(&gram_matrix(&data.inputs, 7, KernelSource::Exact { sigma })?)?;
    println!("{:6} rank@1e-8 {:>4}  rank@1e-12 {:>4}  top-60 energy {:.6}", "exact", numerical_rank(&exact, 1e-8), numerical_rank(&exact, 1e-12), energy_fraction(&exact, 60));

    let grid = dense_grid_rule(7, 5)?;
    let maps = [
        ("RFF1", build_rff1(7, 120, sigma, 1)?),
        ("RFF2", build_rff2(7, 120, sigma, 1)?),
        ("GQ", build_gq(7, sigma, &grid, Some(60), Some(1))?),
        ("TS", build_taylor(7, 3, sigma)?),
    ];
    for (name, map) in &maps {
        let eig = eigenspectrum(&gram_matrix(&data.inputs, 7, KernelSource::Features(map))?)?;
        println!(
            "{name:6} rank@1e-8 {:>4}  rank@1e-12 {:>4}  top-60 energy {:.6}",
            numerical_rank(&eig, 1e-8),
            numerical_rank(&eig, 1e-12),
            energy_fraction(&eig, 60)
        );
    }
    Ok(())
}
