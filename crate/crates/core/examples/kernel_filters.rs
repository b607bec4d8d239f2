//! Kernel-trick filters on Mackey-Glass: KLMS, QKLMS at several quantization
//! thresholds, fixed-budget QKLMS and KRLS, with their dictionary sizes.

use ntkaf::data::{embed, generate_mackey_glass, standardize, EmbeddedDataset, MgParams};
use ntkaf::filters::{FbQklms, Klms, Krls, OnlineFilter, Qklms, QuantizationMetric};

fn run(name: &str, mut f: impl OnlineFilter, train: &EmbeddedDataset, test: &EmbeddedDataset) -> ntkaf::Result<()> {
    for (x, y) in train.iter() {
        f.update(x, y)?;
    }
    let mut mse = 0.0;
    for (x, y) in test.iter() {
        mse += (y - f.predict(x)?).powi(2);
    }
    println!("{name:28} test MSE {:.5}  dictionary {:>5}", mse / test.len() as f64, f.dictionary_size().unwrap_or(0));
    Ok(())
}

fn main() -> ntkaf::Result<()> {
    let (series, _) = standardize(&generate_mackey_glass(&MgParams::default(), 5000)?)?;
    let train = embed(&series, 7, 1000, 2000)?;
    let test = embed(&series, 7, 3000, 200)?;
    let (eta, sigma) = (0.4, 1.0);

    run("KLMS", Klms::new(7, eta, sigma), &train, &test)?;
    for q in [1.0, 0.3, 0.14, 0.07, 0.026] {
        let f = Qklms::new(7, eta, sigma, q).with_metric(QuantizationMetric::SquaredEuclidean);
        run(&format!("QKLMS q={q} (squared)"), f, &train, &test)?;
    }
    run("QKLMS q=0.07 (euclidean)", Qklms::new(7, eta, sigma, 0.07), &train, &test)?;
    let fb = FbQklms::new(7, eta, sigma, 0.07, 150, 0.9)?.with_metric(QuantizationMetric::SquaredEuclidean);
    run("FB-QKLMS budget=150", fb, &train, &test)?;
    run("KRLS", Krls::new(7, sigma, 0.01)?, &train, &test)?;
    Ok(())
}
