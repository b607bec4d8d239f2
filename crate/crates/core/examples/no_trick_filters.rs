//! Linear filters run on explicit feature maps: NT-LMS and NT-RLS with each
//! map kind, against plain LMS and RLS, on one Mackey-Glass split.

use std::sync::Arc;

use ntkaf::data::{embed, generate_mackey_glass, standardize, EmbeddedDataset, MgParams};
use ntkaf::feature_maps::{build_gq, build_rff1, build_rff2, build_taylor};
use ntkaf::filters::{Lms, NoTrick, OnlineFilter, Rls};
use ntkaf::quadrature::dense_grid_rule;

fn test_mse(f: &impl OnlineFilter, test: &EmbeddedDataset) -> ntkaf::Result<f64> {
    let mut s = 0.0;
    for (x, y) in test.iter() {
        s += (y - f.predict(x)?).powi(2);
    }
    Ok(s / test.len() as f64)
}

fn train(f: &mut impl OnlineFilter, data: &EmbeddedDataset) -> ntkaf::Result<()> {
    for (x, y) in data.iter() {
        f.update(x, y)?;
    }
    Ok(())
}

fn main() -> ntkaf::Result<()> {
    let (series, _) = standardize(&generate_mackey_glass(&MgParams::default(), 5000)?)?;
    let train_set = embed(&series, 7, 1000, 2000)?;
    let test_set = embed(&series, 7, 3000, 200)?;
    let sigma = 1.0;

    let mut lms = Lms::new(7, 0.4);
    let mut rls = Rls::new(7, 1.0, 100.0)?;
    train(&mut lms, &train_set)?;
    train(&mut rls, &train_set)?;
    println!("{:14} test MSE {:.5}", "LMS", test_mse(&lms, &test_set)?);
    println!("{:14} test MSE {:.5}", "RLS", test_mse(&rls, &test_set)?);

    let grid = dense_grid_rule(7, 5)?;
    let maps = [
        ("RFF1", build_rff1(7, 330, sigma, 1)?),
        ("RFF2", build_rff2(7, 330, sigma, 1)?),
        ("TS", build_taylor(7, 4, sigma)?),
        ("GQ", build_gq(7, sigma, &grid, Some(165), Some(1))?),
    ];
    for (name, map) in maps {
        let map = Arc::new(map);
        let mut nt_lms = NoTrick::new(map.clone(), Lms::new(330, 0.4));
        let mut nt_rls = NoTrick::new(map, Rls::new(330, 1.0, 100.0)?);
        train(&mut nt_lms, &train_set)?;
        train(&mut nt_rls, &train_set)?;
        println!("{:14} test MSE {:.5}", format!("NT-LMS-{name}"), test_mse(&nt_lms, &test_set)?);
        println!("{:14} test MSE {:.5}", format!("NT-RLS-{name}"), test_mse(&nt_rls, &test_set)?);
    }
    Ok(())
}
