//! Gram matrices and their eigenspectra.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::feature_maps::{gaussian_kernel, FeatureMap};
use crate::quadrature::check_cap;

/// Default cap on the number of points in a Gram matrix.
pub const DEFAULT_GRAM_CAP: usize = 5000;

/// Where Gram entries come from.
#[derive(Debug, Clone, Copy)]
pub enum KernelSource<'a> {
    Exact { sigma: f64 },
    Features(&'a FeatureMap),
}

/// `G[i][j] = k(x_i, x_j)` for row-major `points` of dimension `d`.
pub fn gram_matrix(points: &[f64], d: usize, source: KernelSource<'_>) -> Result<DMatrix<f64>> {
    gram_matrix_capped(points, d, source, DEFAULT_GRAM_CAP)
}

pub fn gram_matrix_capped(points: &[f64], d: usize, source: KernelSource<'_>, cap: usize) -> Result<DMatrix<f64>> {
    if d == 0 || points.is_empty() || points.len() % d != 0 {
        return Err(invalid("points must be a non-empty row-major array of d-dimensional points"));
    }
    let n = points.len() / d;
    check_cap("Gram matrix points", n as u128, cap)?;
    let row = |i: usize| &points[i * d..(i + 1) * d];

    let mut g = DMatrix::zeros(n, n);
    match source {
        KernelSource::Exact { sigma } => {
            for i in 0..n {
                g[(i, i)] = 1.0;
                for j in i + 1..n {
                    g[(i, j)] = gaussian_kernel(row(i), row(j), sigma);
                }
            }
        }
        KernelSource::Features(map) => {
            check_dim(map.input_dim(), d)?;
            let z = feature_matrix(points, map)?;
            // upper triangle of Z Z'
            for j in 0..n {
                let zj = z.column(j);
                for i in 0..=j {
                    g[(i, j)] = z.column(i).dot(&zj);
                }
            }
        }
    }
    g.fill_lower_triangle_with_upper_triangle();
    Ok(g)
}

/// Columns are `z(x_i)`: a `D x n` matrix.
pub fn feature_matrix(points: &[f64], map: &FeatureMap) -> Result<DMatrix<f64>> {
    let d = map.input_dim();
    let n = points.len() / d;
    let mut z = DMatrix::zeros(map.output_dim(), n);
    for (i, x) in points.chunks_exact(d).enumerate() {
        map.map_into(x, z.column_mut(i).as_mut_slice())?;
    }
    Ok(z)
}

/// Eigenvalues of a symmetric matrix in descending order. Tiny negative
/// values from round-off are reported as zero; anything below
/// `-max(1e-8, 1e-6 * trace)` means the kernel is not positive semidefinite
/// and is an error.
pub fn eigenspectrum(g: &DMatrix<f64>) -> Result<Vec<f64>> {
    if !g.is_square() {
        return Err(invalid("eigenspectrum needs a square matrix"));
    }
    let trace = g.trace();
    let mut eig: Vec<f64> = SymmetricEigen::new(g.clone()).eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    let threshold = -(1e-8f64).max(1e-6 * trace.abs());
    if let Some(&min) = eig.last() {
        if min < threshold {
            return Err(Error::NotPositiveSemidefinite { eigenvalue: min, threshold });
        }
    }
    eig.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok(eig)
}

/// Number of eigenvalues above `relative_tolerance * largest`.
pub fn numerical_rank(spectrum: &[f64], relative_tolerance: f64) -> usize {
    let top = spectrum.iter().copied().fold(0.0, f64::max);
    spectrum.iter().filter(|&&v| v > relative_tolerance * top).count()
}

/// Fraction of the total eigenvalue mass in the leading `m` eigenvalues.
pub fn energy_fraction(spectrum: &[f64], m: usize) -> f64 {
    let total: f64 = spectrum.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    spectrum.iter().take(m).sum::<f64>() / total
}

/// Index-wise mean and sample standard deviation of descending spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumStats {
    pub label: String,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub trials: usize,
}

pub fn average_spectra(label: impl Into<String>, spectra: &[Vec<f64>]) -> Result<SpectrumStats> {
    let first = spectra.first().ok_or_else(|| invalid("no spectra to average"))?;
    let n = first.len();
    if spectra.iter().any(|s| s.len() != n) {
        return Err(invalid("spectra must all have the same length"));
    }
    let count = spectra.len() as f64;
    let mut mean = vec![0.0; n];
    let mut std = vec![0.0; n];
    for i in 0..n {
        let mut sorted: Vec<f64> = spectra.iter().map(|s| s[i]).collect();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let m = sorted.iter().sum::<f64>() / count;
        mean[i] = m;
        std[i] = if spectra.len() > 1 { (sorted.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (count - 1.0)).sqrt() } else { 0.0 };
    }
    Ok(SpectrumStats { label: label.into(), mean, std, trials: spectra.len() })
}

/// One row per eigen-index: `index,<label>_mean,<label>_std,...`.
pub fn write_spectra_csv<W: Write>(stats: &[SpectrumStats], preamble: Option<&str>, mut out: W) -> Result<()> {
    if let Some(p) = preamble {
        writeln!(out, "# {p}")?;
    }
    let n = stats.iter().map(|s| s.mean.len()).max().unwrap_or(0);
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["index".to_string()];
    for s in stats {
        header.push(format!("{}_mean", s.label));
        header.push(format!("{}_std", s.label));
    }
    wtr.write_record(&header)?;
    for i in 0..n {
        let mut row = vec![(i + 1).to_string()];
        for s in stats {
            row.push(s.mean.get(i).map(|v| format!("{v:e}")).unwrap_or_default());
            row.push(s.std.get(i).map(|v| format!("{v:e}")).unwrap_or_default());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}
