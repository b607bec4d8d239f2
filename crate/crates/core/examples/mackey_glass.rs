//! Generates the Mackey-Glass series, standardizes it, embeds it for one-step
//! prediction and adds noise at a few SNRs. Writes the clean series to
//! `mackey_glass.csv` when given an output path.

use ntkaf::data::{add_awgn, embed, generate_mackey_glass, standardize, write_series_csv, MgParams};

fn main() -> ntkaf::Result<()> {
    let params = MgParams::default();
    let raw = generate_mackey_glass(&params, 5000)?;
    let (series, scaling) = standardize(&raw)?;
    let (lo, hi) = raw.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
    println!("5000 samples, raw range [{lo:.4}, {hi:.4}]");
    println!("scaling: mean {:.5}, std {:.5}, max-abs {:.5}", scaling.mean, scaling.std, scaling.max_abs);

    let data = embed(&series, 7, 100, 3)?;
    for (x, y) in data.iter() {
        let x: Vec<String> = x.iter().map(|v| format!("{v:+.3}")).collect();
        println!("  [{}] -> {y:+.3}", x.join(" "));
    }

    let power = series.iter().map(|v| v * v).sum::<f64>() / series.len() as f64;
    for snr in [14.0, 8.0] {
        let noisy = add_awgn(&series, snr, 7)?;
        let noise = noisy.iter().zip(&series).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / series.len() as f64;
        println!("SNR {snr} dB: measured {:.2} dB", 10.0 * (power / noise).log10());
    }

    if let Some(path) = std::env::args().nth(1) {
        write_series_csv(&raw, std::fs::File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
