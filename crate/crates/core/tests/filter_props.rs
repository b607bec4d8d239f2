use std::sync::Arc;

use ntkaf::data::{embed, generate_mackey_glass, standardize, MgParams};
use ntkaf::feature_maps::{build_rff1, build_taylor};
use ntkaf::filters::{ExRls, FbQklms, Klms, Krls, Lms, NoTrick, OnlineFilter, Qklms, QuantizationMetric, Rls};

fn mg() -> ntkaf::data::EmbeddedDataset {
    let (s, _) = standardize(&generate_mackey_glass(&MgParams::default(), 1500).unwrap()).unwrap();
    embed(&s, 7, 0, 1000).unwrap()
}

fn test_mse(f: &dyn OnlineFilter, data: &ntkaf::data::EmbeddedDataset, from: usize) -> f64 {
    let n = data.len() - from;
    data.iter().skip(from).map(|(x, y)| (y - f.predict(x).unwrap()).powi(2)).sum::<f64>() / n as f64
}

#[test]
fn every_filter_learns_the_series() {
    let data = mg();
    let map = Arc::new(build_rff1(7, 100, 1.0, 2).unwrap());
    let mut filters: Vec<(&str, Box<dyn OnlineFilter>)> = vec![
        ("LMS", Box::new(Lms::new(7, 0.4))),
        ("RLS", Box::new(Rls::new(7, 1.0, 100.0).unwrap())),
        ("Ex-RLS", Box::new(ExRls::new(7, 1.0, 100.0, 1.0, 0.0).unwrap())),
        ("KLMS", Box::new(Klms::new(7, 0.4, 1.0))),
        ("QKLMS", Box::new(Qklms::new(7, 0.4, 1.0, 0.07).with_metric(QuantizationMetric::SquaredEuclidean))),
        ("FB-QKLMS", Box::new(FbQklms::new(7, 0.4, 1.0, 0.07, 100, 0.9).unwrap())),
        ("KRLS", Box::new(Krls::new(7, 1.0, 0.01).unwrap())),
        ("NT-LMS", Box::new(NoTrick::new(map.clone(), Lms::new(100, 0.4)))),
        ("NT-RLS", Box::new(NoTrick::new(map, Rls::new(100, 1.0, 100.0).unwrap()))),
    ];
    let variance = data.targets[800..].iter().map(|y| y * y).sum::<f64>() / 200.0;
    for (name, f) in filters.iter_mut() {
        for (x, y) in data.iter().take(800) {
            let p = f.update(x, y).unwrap();
            assert!(p.value.is_finite(), "{name}");
        }
        let mse = test_mse(f.as_ref(), &data, 800);
        assert!(mse < 0.5 * variance, "{name}: {mse} vs {variance}");
    }
}

#[test]
fn kernel_filters_beat_linear_ones() {
    let data = mg();
    let mut lms = Lms::new(7, 0.4);
    let mut klms = Klms::new(7, 0.4, 1.0);
    for (x, y) in data.iter().take(800) {
        lms.update(x, y).unwrap();
        klms.update(x, y).unwrap();
    }
    assert!(test_mse(&klms, &data, 800) < test_mse(&lms, &data, 800) / 5.0);
}

#[test]
fn budget_caps_dictionary() {
    let data = mg();
    let mut f = FbQklms::new(7, 0.4, 1.0, 0.0, 50, 0.9).unwrap();
    for (x, y) in data.iter() {
        f.update(x, y).unwrap();
        assert!(f.dictionary_size().unwrap() <= 50);
    }
    assert_eq!(f.discarded(), data.len() - 50);
}

#[test]
fn taylor_no_trick_lms_tracks_klms_at_high_degree() {
    let data = mg();
    let map = Arc::new(build_taylor(7, 8, 1.0).unwrap());
    let mut nt = NoTrick::new(map.clone(), Lms::new(map.output_dim(), 0.2));
    let mut klms = Klms::new(7, 0.2, 1.0);
    let mut worst = 0.0f64;
    for (x, y) in data.iter().take(300) {
        let a = nt.update(x, y).unwrap();
        let b = klms.update(x, y).unwrap();
        worst = worst.max((a.value - b.value).abs());
    }
    assert!(worst < 1e-3, "{worst}");
}
