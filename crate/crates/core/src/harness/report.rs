use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::{ExperimentResults, TimingResult};
use crate::error::Result;

/// Everything needed to rebuild the reports; read by `summarize` and `timing`.
pub const RESULTS_FILE: &str = "results.json";

/// Final-MSE statistics for one (algorithm, SNR) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub algorithm: String,
    pub snr_db: Option<f64>,
    pub completed: usize,
    pub failed: usize,
    /// `None` when no trial completed.
    pub mean_mse: Option<f64>,
    /// Sample standard deviation; zero for a single trial.
    pub std_mse: Option<f64>,
    pub mean_dictionary_size: Option<f64>,
    /// Only one trial completed, so the spread is not meaningful.
    pub single_trial: bool,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (mean, std)
}

/// Mean and sample std of the final test MSE per (algorithm, SNR).
pub fn summarize(results: &ExperimentResults) -> Vec<CellSummary> {
    let mut out = Vec::new();
    for alg in &results.algorithms {
        for &snr in &results.config.noise.snr_db {
            let cell: Vec<_> = results.trials.iter().filter(|t| &t.algorithm == alg && t.snr_db == snr).collect();
            let ok: Vec<_> = cell.iter().filter(|t| !t.failed()).collect();
            let finals: Vec<f64> = ok.iter().map(|t| t.final_mse).collect();
            let (mean_mse, std_mse) = if finals.is_empty() { (None, None) } else { let (m, s) = mean_std(&finals); (Some(m), Some(s)) };
            let sizes: Vec<f64> = ok.iter().filter_map(|t| t.dictionary_sizes.as_ref()?.last().map(|&s| s as f64)).collect();
            out.push(CellSummary {
                algorithm: alg.clone(),
                snr_db: snr,
                completed: ok.len(),
                failed: cell.len() - ok.len(),
                mean_mse,
                std_mse,
                mean_dictionary_size: (!sizes.is_empty()).then(|| mean_std(&sizes).0),
                single_trial: ok.len() == 1,
            });
        }
    }
    out
}

fn snr_label(snr: Option<f64>) -> String {
    snr.map_or_else(|| "clean".to_string(), |s| format!("{s} dB"))
}

/// Plain-text table, one row per algorithm and one column per SNR.
pub fn format_summary(cells: &[CellSummary]) -> String {
    let mut snrs: Vec<Option<f64>> = Vec::new();
    let mut algs: Vec<&str> = Vec::new();
    for c in cells {
        if !snrs.contains(&c.snr_db) {
            snrs.push(c.snr_db);
        }
        if !algs.contains(&c.algorithm.as_str()) {
            algs.push(&c.algorithm);
        }
    }
    let width = algs.iter().map(|a| a.len()).max().unwrap_or(9).max(9);
    let mut s = format!("{:width$}", "algorithm");
    for &snr in &snrs {
        let _ = write!(s, "  {:>28}", snr_label(snr));
    }
    s.push('\n');
    for alg in algs {
        let _ = write!(s, "{alg:width$}");
        for &snr in &snrs {
            let cell = cells.iter().find(|c| c.algorithm == alg && c.snr_db == snr);
            let text = match cell {
                Some(CellSummary { mean_mse: Some(m), std_mse: Some(sd), mean_dictionary_size, single_trial, .. }) => {
                    let mut t = format!("{m:.4} ± {sd:.4}");
                    if let Some(size) = mean_dictionary_size {
                        let _ = write!(t, " ({size:.0})");
                    }
                    if *single_trial {
                        t.push('*');
                    }
                    t
                }
                _ => "missing".to_string(),
            };
            let _ = write!(s, "  {text:>28}");
        }
        s.push('\n');
    }
    if cells.iter().any(|c| c.single_trial) {
        s.push_str("* single trial, std not meaningful\n");
    }
    s
}

/// Per-iteration timing statistics for one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub algorithm: String,
    pub build_seconds: f64,
    /// Median step time over the first 10% of iterations.
    pub early_median: f64,
    /// Median step time over the last 10% of iterations.
    pub late_median: f64,
    pub ratio: f64,
    /// Slope of log(step time) against log(iteration), fitted on the medians
    /// of ten equal windows.
    pub growth_exponent: f64,
    pub total_seconds: f64,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) }
}

pub fn timing_report(timing: &[TimingResult]) -> Vec<TimingSummary> {
    timing
        .iter()
        .filter(|t| !t.iteration_seconds.is_empty())
        .map(|t| {
            let v = &t.iteration_seconds;
            let n = v.len();
            let w = (n / 10).max(1);
            let early_median = median(&v[..w]);
            let late_median = median(&v[n - w..]);
            let windows = if n >= 10 { 10 } else { n };
            let pts: Vec<(f64, f64)> = (0..windows)
                .map(|k| {
                    let (a, b) = (k * n / windows, (k + 1) * n / windows);
                    let mid = (a + b + 1) as f64 / 2.0;
                    (mid.ln(), median(&v[a..b]).max(1e-12).ln())
                })
                .collect();
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            TimingSummary {
                algorithm: t.algorithm.clone(),
                build_seconds: t.build_seconds,
                early_median,
                late_median,
                ratio: late_median / early_median,
                growth_exponent: if sxx > 0.0 { sxy / sxx } else { 0.0 },
                total_seconds: v.iter().sum(),
            }
        })
        .collect()
}

pub fn format_timing(rows: &[TimingSummary]) -> String {
    let width = rows.iter().map(|r| r.algorithm.len()).max().unwrap_or(9).max(9);
    let mut s = format!("{:width$}  {:>11}  {:>11}  {:>7}  {:>8}  {:>10}  {:>10}\n", "algorithm", "early (s)", "late (s)", "ratio", "exponent", "total (s)", "build (s)");
    for r in rows {
        let _ = writeln!(
            s,
            "{:width$}  {:>11.3e}  {:>11.3e}  {:>7.2}  {:>8.2}  {:>10.3e}  {:>10.3e}",
            r.algorithm, r.early_median, r.late_median, r.ratio, r.growth_exponent, r.total_seconds, r.build_seconds
        );
    }
    s
}

fn slug(label: &str, snr: Option<f64>) -> String {
    let mut s: String = label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c.to_ascii_lowercase() } else { '_' }).collect();
    s.push_str(&snr.map_or_else(|| "_clean".to_string(), |v| format!("_snr{v}")));
    s
}

fn csv_writer(path: &Path, hash: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "# config_hash={hash}")?;
    Ok(csv::Writer::from_writer(f))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Writes `results.json`, `summary.csv`, one learning-curve CSV per cell under
/// `curves/`, and the timing CSVs when timing was recorded.
pub fn write_outputs(results: &ExperimentResults, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("curves"))?;
    let hash = &results.config_hash;
    serde_json::to_writer(BufWriter::new(File::create(dir.join(RESULTS_FILE))?), results)?;

    let mut w = csv_writer(&dir.join("summary.csv"), hash)?;
    w.write_record(["algorithm", "snr_db", "completed", "failed", "mean_mse", "std_mse", "mean_dictionary_size", "single_trial"])?;
    for c in summarize(results) {
        w.write_record([
            c.algorithm.clone(),
            c.snr_db.map(|s| s.to_string()).unwrap_or_default(),
            c.completed.to_string(),
            c.failed.to_string(),
            opt(c.mean_mse),
            opt(c.std_mse),
            opt(c.mean_dictionary_size),
            c.single_trial.to_string(),
        ])?;
    }
    w.flush()?;

    for alg in &results.algorithms {
        for &snr in &results.config.noise.snr_db {
            let curves: Vec<&[f64]> =
                results.trials.iter().filter(|t| &t.algorithm == alg && t.snr_db == snr && !t.failed()).map(|t| t.curve.as_slice()).collect();
            let mut w = csv_writer(&dir.join("curves").join(format!("{}.csv", slug(alg, snr))), hash)?;
            w.write_record(["iteration", "mean_mse", "std_mse", "trials"])?;
            for (k, it) in results.checkpoints.iter().enumerate() {
                let vals: Vec<f64> = curves.iter().map(|c| c[k]).collect();
                let (m, s) = if vals.is_empty() { (None, None) } else { let (m, s) = mean_std(&vals); (Some(m), Some(s)) };
                w.write_record([it.to_string(), opt(m), opt(s), vals.len().to_string()])?;
            }
            w.flush()?;
        }
    }

    if !results.timing.is_empty() {
        let mut w = csv_writer(&dir.join("timing.csv"), hash)?;
        let mut header = vec!["iteration".to_string()];
        header.extend(results.timing.iter().map(|t| t.algorithm.clone()));
        w.write_record(&header)?;
        let n = results.timing.iter().map(|t| t.iteration_seconds.len()).max().unwrap_or(0);
        for i in 0..n {
            let mut row = vec![(i + 1).to_string()];
            row.extend(results.timing.iter().map(|t| opt(t.iteration_seconds.get(i).copied())));
            w.write_record(&row)?;
        }
        w.flush()?;

        let mut w = csv_writer(&dir.join("timing_summary.csv"), hash)?;
        w.write_record(["algorithm", "early_median_s", "late_median_s", "late_early_ratio", "growth_exponent", "total_s", "build_s"])?;
        for r in timing_report(&results.timing) {
            w.write_record([
                r.algorithm.clone(),
                format!("{:e}", r.early_median),
                format!("{:e}", r.late_median),
                format!("{}", r.ratio),
                format!("{}", r.growth_exponent),
                format!("{:e}", r.total_seconds),
                format!("{:e}", r.build_seconds),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Reads the `results.json` written by [`write_outputs`].
pub fn load_results(dir: &Path) -> Result<ExperimentResults> {
    let text = fs::read_to_string(dir.join(RESULTS_FILE))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{ExperimentConfig, TrialResult};

    fn results(finals: &[(&str, Option<f64>, f64)]) -> ExperimentResults {
        let config = ExperimentConfig::from_json(r#"{"sigma": 1, "etas": [0.4], "noise": {"snr_db": [null, 8]},
            "algorithms": [{"label": "A", "filter": {"kind": "lms"}}, {"label": "B", "filter": {"kind": "klms"}}]}"#)
        .unwrap();
        let trials = finals
            .iter()
            .enumerate()
            .map(|(i, &(a, snr, m))| TrialResult {
                algorithm: a.into(),
                snr_db: snr,
                trial: i,
                seed: 0,
                train_start: 0,
                curve: vec![1.0, m],
                final_mse: m,
                dictionary_sizes: (a == "B").then(|| vec![0, 10 + i]),
                error: None,
            })
            .collect();
        ExperimentResults {
            config_hash: config.hash(),
            config,
            algorithms: vec!["A".into(), "B".into()],
            checkpoints: vec![0, 10],
            trials,
            timing: vec![],
        }
    }

    #[test]
    fn summary_statistics() {
        let r = results(&[("A", None, 1.0), ("A", None, 3.0), ("B", None, 0.5), ("A", Some(8.0), 2.0)]);
        let cells = summarize(&r);
        assert_eq!(cells.len(), 4);
        let a = &cells[0];
        assert_eq!((a.mean_mse, a.completed, a.single_trial), (Some(2.0), 2, false));
        assert!((a.std_mse.unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let a8 = &cells[1];
        assert_eq!((a8.std_mse, a8.single_trial), (Some(0.0), true));
        assert_eq!(cells[2].mean_dictionary_size, Some(12.0));
        let b8 = &cells[3];
        assert_eq!((b8.mean_mse, b8.completed), (None, 0));
        let table = format_summary(&cells);
        assert!(table.contains("missing"));
        assert!(table.contains("2.0000 ± 0.0000*"));
    }

    #[test]
    fn timing_slopes() {
        let n = 2000;
        let flat = TimingResult { algorithm: "flat".into(), build_seconds: 0.0, iteration_seconds: vec![1e-6; n] };
        let linear = TimingResult { algorithm: "lin".into(), build_seconds: 0.0, iteration_seconds: (1..=n).map(|i| 1e-8 * i as f64).collect() };
        let rows = timing_report(&[flat, linear]);
        assert_eq!(rows[0].ratio, 1.0);
        assert!(rows[0].growth_exponent.abs() < 1e-9);
        assert!(rows[1].ratio > 9.0);
        assert!((rows[1].growth_exponent - 1.0).abs() < 0.1);
    }

    #[test]
    fn outputs_round_trip() {
        let r = results(&[("A", None, 1.0), ("B", None, 0.5)]);
        let dir = tempfile::tempdir().unwrap();
        write_outputs(&r, dir.path()).unwrap();
        assert_eq!(load_results(dir.path()).unwrap(), r);
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(summary.starts_with(&format!("# config_hash={}\nalgorithm,snr_db,", r.config_hash)));
        let curve = fs::read_to_string(dir.path().join("curves/a_clean.csv")).unwrap();
        assert!(curve.contains("iteration,mean_mse,std_mse,trials\n0,1e0,0e0,1\n10,1e0,0e0,1\n"));
    }
}
