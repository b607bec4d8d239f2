//! End-to-end checks of the library's headline properties. Each test writes a
//! single `[PASS]` or `[FAIL]` line with the measured numbers to stderr before
//! asserting. The line bypasses test output capture, so it shows up in a plain
//! `cargo test` run.

use std::io::Write;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ntkaf::analysis::{eigenspectrum, gram_matrix, numerical_rank, KernelSource};
use ntkaf::data::{embed, generate_mackey_glass, standardize, MgParams};
use ntkaf::feature_maps::{build_gq, build_rff1, build_rff2, build_taylor};
use ntkaf::filters::{Krls, NoTrick, OnlineFilter, Rls};
use ntkaf::harness::{run_experiment, timing_report, ExperimentConfig, ExperimentResults};
use ntkaf::quadrature::{dense_grid_rule, polynomial_exactness_check, sparse_grid_rule};

fn report(name: &str, ok: bool, detail: String) {
    let line = format!("[{}] {name}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
    assert!(ok, "{name} failed: {detail}");
}

fn gauss(x: &[f64], y: &[f64], sigma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-d2 / (2.0 * sigma * sigma)).exp()
}

fn table1_config() -> ExperimentConfig {
    ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/table1.json")).expect("table1 config")
}

#[test]
fn taylor_feature_counts() {
    let counts: Vec<usize> = (1..=5).map(|r| build_taylor(7, r, 1.0).unwrap().output_dim()).collect();
    report("taylor feature counts for d=7, r=1..5", counts == [8, 36, 120, 330, 792], format!("{counts:?}"));
}

#[test]
fn taylor_features_reproduce_truncated_kernel() {
    let sigma = 1.0;
    let r = 4;
    let map = build_taylor(7, r, sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut worst_identity, mut bound_violations) = (0.0f64, 0usize);
    for _ in 0..10_000 {
        let x: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let y: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let est = map.kernel_estimate(&x, &y).unwrap();
        // exp(-(|x|^2+|y|^2)/2s^2) * sum_{n<=r} (x.y/s^2)^n / n!
        let xy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / (sigma * sigma);
        let nx: f64 = x.iter().map(|a| a * a).sum();
        let ny: f64 = y.iter().map(|a| a * a).sum();
        let mut series = 0.0;
        let mut fact = 1.0;
        for n in 0..=r {
            if n > 0 {
                fact *= f64::from(n);
            }
            series += xy.powi(n as i32) / fact;
        }
        let closed = (-(nx + ny) / (2.0 * sigma * sigma)).exp() * series;
        worst_identity = worst_identity.max((est - closed).abs());
        // |k - k_r| <= (|x||y|/s^2)^(r+1) / (r+1)!
        let bound = (nx.sqrt() * ny.sqrt() / (sigma * sigma)).powi(r as i32 + 1) / (fact * f64::from(r + 1));
        if (gauss(&x, &y, sigma) - est).abs() > bound {
            bound_violations += 1;
        }
    }
    report(
        "taylor estimate equals closed form and respects the truncation bound",
        worst_identity <= 1e-12 && bound_violations == 0,
        format!("max |estimate - closed form| = {worst_identity:.2e} (tol 1e-12), bound violations = {bound_violations}/10000"),
    );
}

#[test]
fn quadrature_rules_are_exact_to_their_degree() {
    let dense = polynomial_exactness_check(&dense_grid_rule(3, 5).unwrap(), 9);
    let mut sparse_worst = 0.0f64;
    let mut cases = Vec::new();
    for (d, level) in [(2, 4), (3, 3), (5, 3), (7, 5)] {
        let rule = sparse_grid_rule(d, level).unwrap();
        let err = polynomial_exactness_check(&rule, rule.degree());
        sparse_worst = sparse_worst.max(err);
        cases.push(format!("d={d} L={level} deg {} err {err:.1e}", rule.degree()));
    }
    report(
        "dense and sparse Gauss-Hermite rules are polynomially exact",
        dense <= 1e-9 && sparse_worst <= 1e-8,
        format!("dense(3,5) to degree 9: {dense:.1e} (tol 1e-9); sparse: {} (tol 1e-8)", cases.join(", ")),
    );
}

#[test]
fn random_fourier_variance_law() {
    let (dim, sigma, seeds) = (64usize, 1.0, 2000u64);
    let x = [0.1, -0.2, 0.3];
    let mut lines = Vec::new();
    let mut ok = true;
    for r in [0.5, 0.75, 1.0, 1.25, 1.5] {
        let y = [x[0] + r, x[1], x[2]];
        let k = gauss(&x, &y, sigma);
        let k2 = (-(2.0 * r) * (2.0 * r) / (2.0 * sigma * sigma)).exp();
        // one sin/cos pair: Var = (1 + k(2d))/2 - k^2 per pair, D/2 pairs
        let law1 = ((1.0 + k2) / 2.0 - k * k) / (dim / 2) as f64;
        // one phase-shifted cosine: adds an independent 1/2 from the phase term
        let law2 = ((1.0 + k2) / 2.0 - k * k + 0.5) / dim as f64;
        let (mut v1, mut v2) = (0.0, 0.0);
        for seed in 0..seeds {
            v1 += (build_rff1(3, dim, sigma, seed).unwrap().kernel_estimate(&x, &y).unwrap() - k).powi(2);
            v2 += (build_rff2(3, dim, sigma, seed + 1_000_000).unwrap().kernel_estimate(&x, &y).unwrap() - k).powi(2);
        }
        let (e1, e2) = (v1 / seeds as f64, v2 / seeds as f64);
        let (r1, r2) = ((e1 - law1).abs() / law1, (e2 - law2).abs() / law2);
        ok &= r1 <= 0.10 && r2 <= 0.10 && e2 > e1;
        lines.push(format!("|d|={r}: RFF1 {e1:.5}/{law1:.5} ({:.1}%), RFF2 {e2:.5}/{law2:.5} ({:.1}%)", 100.0 * r1, 100.0 * r2));
    }
    report("random Fourier estimator variances follow the closed forms", ok, lines.join("; "));
}

#[test]
fn krls_and_no_trick_rls_match_batch_solutions() {
    let (n, d, sigma, reg) = (200, 3, 0.8, 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let ys: Vec<f64> = xs.iter().map(|x| (3.0 * x[0]).sin() + x[1] * x[2]).collect();

    let mut krls = Krls::new(d, sigma, reg).unwrap();
    for (x, y) in xs.iter().zip(&ys) {
        krls.update(x, *y).unwrap();
    }
    let k = DMatrix::from_fn(n, n, |i, j| gauss(&xs[i], &xs[j], sigma)) + DMatrix::identity(n, n) * reg;
    let alpha = k.lu().solve(&DVector::from_column_slice(&ys)).unwrap();
    let krls_err = krls.dictionary().coefficients().iter().zip(alpha.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let map = Arc::new(build_taylor(d, 2, 1.0).unwrap());
    let dim = map.output_dim();
    let w_true: Vec<f64> = (0..dim).map(|i| ((i * 7 % 5) as f64 - 2.0) / 3.0).collect();
    let zs: Vec<Vec<f64>> = xs.iter().map(|x| map.map(x).unwrap()).collect();
    let targets: Vec<f64> = zs.iter().map(|z| z.iter().zip(&w_true).map(|(a, b)| a * b).sum()).collect();
    let mut nt = NoTrick::new(map, Rls::new(dim, 1.0, 1e8).unwrap());
    for (x, y) in xs.iter().zip(&targets) {
        nt.update(x, *y).unwrap();
    }
    let z = DMatrix::from_fn(n, dim, |i, j| zs[i][j]);
    let batch = z.clone().svd(true, true).solve(&DVector::from_column_slice(&targets), 1e-12).unwrap();
    let w = DVector::from_column_slice(nt.inner().weights());
    let rel = (&w - &batch).norm() / batch.norm();

    report(
        "KRLS equals the regularized batch solve and NT-RLS equals batch least squares",
        krls_err <= 1e-8 && rel <= 1e-4,
        format!("KRLS max coefficient error {krls_err:.2e} (tol 1e-8) at n=200; NT-RLS relative weight error {rel:.2e} (tol 1e-4)"),
    );
}

fn clean_and_8db() -> &'static ExperimentResults {
    static RUN: OnceLock<ExperimentResults> = OnceLock::new();
    RUN.get_or_init(|| {
        let mut cfg = table1_config();
        cfg.trials = 50;
        cfg.noise.snr_db = vec![None, Some(8.0)];
        cfg.timing.enabled = false;
        cfg.output_dir = None;
        run_experiment(&cfg).expect("table run")
    })
}

/// Mean and sample std of final MSEs for one cell, straight from the trials.
fn cell(r: &ExperimentResults, label: &str, snr: Option<f64>) -> (f64, f64, Vec<f64>) {
    let v: Vec<f64> = r.trials.iter().filter(|t| t.algorithm == label && t.snr_db == snr && t.error.is_none()).map(|t| t.final_mse).collect();
    assert!(!v.is_empty(), "no completed trials for {label}");
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let s = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    (m, s, v)
}

#[test]
fn clean_prediction_ordering() {
    let r = clean_and_8db();
    let m = |l: &str| cell(r, l, None).0;
    let s = |l: &str| cell(r, l, None).1;
    let pooled = ((s("NT-KLMS-RFF1").powi(2) + s("NT-KLMS-RFF2").powi(2)) / 2.0).sqrt();
    let checks = [
        ("KLMS <= QKLMS", m("KLMS") <= m("QKLMS")),
        ("QKLMS <= NT-GQ", m("QKLMS") <= m("NT-KLMS-GQ")),
        ("NT-GQ < NT-TS", m("NT-KLMS-GQ") < m("NT-KLMS-TS")),
        ("NT-TS <= NT-RFF1", m("NT-KLMS-TS") <= m("NT-KLMS-RFF1")),
        ("NT-RFF1 ~ NT-RFF2", (m("NT-KLMS-RFF1") - m("NT-KLMS-RFF2")).abs() <= pooled),
        ("NT-RFF << LMS", m("LMS") >= 5.0 * m("NT-KLMS-RFF1").max(m("NT-KLMS-RFF2"))),
        ("NT-GQ in [0.001, 0.004]", (0.001..=0.004).contains(&m("NT-KLMS-GQ"))),
    ];
    let means: Vec<String> = ["KLMS", "QKLMS", "NT-KLMS-GQ", "NT-KLMS-TS", "NT-KLMS-RFF1", "NT-KLMS-RFF2", "LMS"]
        .iter()
        .map(|l| format!("{l} {:.4}±{:.4}", m(l), s(l)))
        .collect();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    report(
        "clean final-MSE ordering at D=330, eta=0.4, 50 trials",
        failed.is_empty(),
        format!("{}; violated: {}", means.join(", "), if failed.is_empty() { "none".to_string() } else { failed.join(", ") }),
    );
}

#[test]
fn feature_gram_rank_is_bounded_and_exact_gram_is_full_rank() {
    let sigma = table1_config().sigma;
    let (series, _) = standardize(&generate_mackey_glass(&MgParams::default(), 3000).unwrap()).unwrap();
    let data = embed(&series, 7, 700, 500).unwrap();
    let exact = eigenspectrum(&gram_matrix(&data.inputs, 7, KernelSource::Exact { sigma }).unwrap()).unwrap();
    let exact_rank = numerical_rank(&exact, 1e-12);
    let grid = dense_grid_rule(7, 5).unwrap();
    let maps = [
        ("RFF1", build_rff1(7, 120, sigma, 3).unwrap()),
        ("RFF2", build_rff2(7, 120, sigma, 3).unwrap()),
        ("GQ", build_gq(7, sigma, &grid, Some(60), Some(3)).unwrap()),
        ("TS", build_taylor(7, 3, sigma).unwrap()),
    ];
    let mut ok = exact_rank == 500;
    let mut parts = vec![format!("exact rank@1e-12 = {exact_rank}")];
    for (name, map) in &maps {
        assert_eq!(map.output_dim(), 120);
        let eig = eigenspectrum(&gram_matrix(&data.inputs, 7, KernelSource::Features(map)).unwrap()).unwrap();
        let rank = numerical_rank(&eig, 1e-8);
        ok &= rank <= 120;
        parts.push(format!("{name} rank@1e-8 = {rank}"));
    }
    report("500-point Gram ranks: D=120 maps <= 120, exact kernel = 500", ok, parts.join(", "));
}

#[test]
fn no_trick_step_time_is_flat_and_klms_grows() {
    let mut cfg = table1_config();
    cfg.trials = 1;
    cfg.noise.snr_db = vec![None];
    cfg.output_dir = None;
    cfg.algorithms.retain(|a| a.label.starts_with("NT-KLMS") || a.label == "KLMS");
    cfg.timing.repeats = 5;
    let rows = timing_report(&run_experiment(&cfg).unwrap().timing);
    let mut ok = true;
    let mut parts = Vec::new();
    for row in &rows {
        if row.algorithm == "KLMS" {
            ok &= row.ratio >= 5.0;
        } else {
            ok &= row.ratio <= 1.5;
        }
        parts.push(format!("{} late/early {:.2} (exponent {:.2})", row.algorithm, row.ratio, row.growth_exponent));
    }
    report("per-step time over 2000 iterations: NT-KLMS <= 1.5x, KLMS >= 5x", ok && rows.len() == 5, parts.join(", "));
}

#[test]
fn qklms_dictionary_size_near_314() {
    let r = clean_and_8db();
    let sizes: Vec<f64> = r
        .trials
        .iter()
        .filter(|t| t.algorithm == "QKLMS" && t.snr_db.is_none())
        .map(|t| *t.dictionary_sizes.as_ref().unwrap().last().unwrap() as f64)
        .collect();
    let mean = sizes.iter().sum::<f64>() / sizes.len() as f64;
    report(
        "QKLMS with q=0.07 keeps about 314 centers",
        (mean - 314.0).abs() <= 31.4,
        format!("mean dictionary size {mean:.1} over {} trials (target 314 ± 10%)", sizes.len()),
    );
}

#[test]
fn deterministic_features_hold_up_under_noise() {
    let r = clean_and_8db();
    let snr = Some(8.0);
    let mut ok = true;
    let mut parts = Vec::new();
    for nt in ["NT-KLMS-TS", "NT-KLMS-GQ"] {
        let (m_nt, s_nt, _) = cell(r, nt, snr);
        for kt in ["QKLMS", "KLMS"] {
            let (m_kt, s_kt, _) = cell(r, kt, snr);
            let pooled = ((s_nt * s_nt + s_kt * s_kt) / 2.0).sqrt();
            ok &= m_nt <= m_kt + pooled;
            parts.push(format!("{nt} {m_nt:.4} vs {kt} {m_kt:.4} + {pooled:.4}"));
        }
    }
    report("at 8 dB SNR, NT-TS and NT-GQ are within one pooled std of QKLMS and KLMS", ok, parts.join("; "));
}
