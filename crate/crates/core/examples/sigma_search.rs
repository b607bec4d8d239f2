//! Grid search over the kernel bandwidth for the Table I setup.
//!
//! Runs the clean part of `configs/table1.json` at each candidate sigma and
//! scores how many of the published orderings hold. Pass `--trials N` to
//! change the number of trials (default 50).
//!
//! ```text
//! cargo run --release --example sigma_search | tee configs/sigma_search.log
//! ```

use std::path::Path;

use ntkaf::harness::{format_summary, run_experiment, summarize, CellSummary, ExperimentConfig};

const CANDIDATES: [f64; 5] = [0.25, 0.5, std::f64::consts::FRAC_1_SQRT_2, 1.0, 2.0];

/// Published clean-data means, used to break ties.
const REFERENCE: [(&str, f64); 7] = [
    ("LMS", 0.0537),
    ("NT-KLMS-RFF1", 0.0041),
    ("NT-KLMS-RFF2", 0.0041),
    ("NT-KLMS-TS", 0.0039),
    ("NT-KLMS-GQ", 0.0019),
    ("QKLMS", 0.0012),
    ("KLMS", 0.0010),
];

fn cell<'a>(cells: &'a [CellSummary], label: &str) -> (f64, f64) {
    let c = cells.iter().find(|c| c.algorithm == label).expect("algorithm present");
    (c.mean_mse.unwrap_or(f64::NAN), c.std_mse.unwrap_or(f64::NAN))
}

fn checks(cells: &[CellSummary]) -> Vec<(&'static str, bool)> {
    let m = |l| cell(cells, l).0;
    let pooled = |a, b| ((cell(cells, a).1.powi(2) + cell(cells, b).1.powi(2)) / 2.0).sqrt();
    vec![
        ("KLMS <= QKLMS", m("KLMS") <= m("QKLMS")),
        ("QKLMS <= GQ", m("QKLMS") <= m("NT-KLMS-GQ")),
        ("GQ < TS", m("NT-KLMS-GQ") < m("NT-KLMS-TS")),
        ("TS <= RFF1", m("NT-KLMS-TS") <= m("NT-KLMS-RFF1")),
        ("RFF1 ~ RFF2", (m("NT-KLMS-RFF1") - m("NT-KLMS-RFF2")).abs() <= pooled("NT-KLMS-RFF1", "NT-KLMS-RFF2")),
        ("RFF << LMS", m("LMS") >= 5.0 * m("NT-KLMS-RFF1").max(m("NT-KLMS-RFF2"))),
        ("GQ in [0.001, 0.004]", (0.001..=0.004).contains(&m("NT-KLMS-GQ"))),
    ]
}

fn main() -> ntkaf::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let trials = args.iter().position(|a| a == "--trials").and_then(|i| args.get(i + 1)).map_or(50, |t| t.parse().expect("trial count"));
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/table1.json");
    let mut base = ExperimentConfig::load(&path)?;
    base.trials = trials;
    base.noise.snr_db = vec![None];
    base.timing.enabled = false;
    base.output_dir = None;

    println!("sigma search: {trials} trials per candidate, master seed {}", base.master_seed);
    let mut best: Option<(usize, f64, f64)> = None;
    for sigma in CANDIDATES {
        let mut cfg = base.clone();
        cfg.sigma = sigma;
        let cells = summarize(&run_experiment(&cfg)?);
        let results = checks(&cells);
        let passed = results.iter().filter(|(_, ok)| *ok).count();
        let distance: f64 = REFERENCE.iter().map(|(l, r)| (cell(&cells, l).0 / r).ln().abs()).sum();
        println!("\nsigma = {sigma}");
        print!("{}", format_summary(&cells));
        for (name, ok) in &results {
            println!("  [{}] {name}", if *ok { "x" } else { " " });
        }
        println!("  orderings held: {passed}/{}, log-distance to published means: {distance:.3}", results.len());
        if best.is_none_or(|(p, d, _)| passed > p || (passed == p && distance < d)) {
            best = Some((passed, distance, sigma));
        }
    }
    let (passed, distance, sigma) = best.expect("at least one candidate");
    println!("\nchosen sigma = {sigma} ({passed} orderings held, log-distance {distance:.3})");
    Ok(())
}
