//! Binary treatment: logistic propensity score, then the range of the
//! stabilized IPW effect estimate as the risk-ratio bound grows.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rrsens::prelude::*;

fn main() -> rrsens::Result<()> {
    let n = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut x = Vec::with_capacity(2 * n);
    let (mut treatment, mut outcome) = (Vec::new(), Vec::new());
    for _ in 0..n {
        let age: f64 = rng.random_range(-1.0..1.0);
        let p = 1.0 / (1.0 + (-(0.3 + 1.2 * age)).exp());
        let arm = if rng.random::<f64>() < p { 2 } else { 1 };
        let y = 1.0 + 0.5 * age + if arm == 2 { 0.4 } else { 0.0 } + rng.random_range(-1.0..1.0);
        x.extend([1.0, age]);
        treatment.push(arm);
        outcome.push(y);
    }
    let ds = ObservationalDataset::new(DMatrix::from_row_slice(n, 2, &x), treatment, outcome, 2)?;

    let model = gps::fit_binary_logistic(&ds)?;
    println!(
        "logit coefficients {:?}, converged {}",
        model.coefficients[0], model.converged
    );
    let probs = gps::predict_gps(&model, ds.covariates(), false)?;

    let ate = ContrastSpec::pairwise(2, 1, 2)?;
    for ratio in [1.0, 1.1, 1.25, 1.5, 2.0] {
        let spec = SensitivitySpec::from_ratio(ratio, ModelFamily::RiskRatio)?;
        let est = estimate_interval(&ds, &probs, &ate, &spec)?;
        println!(
            "Gamma0 = {ratio:<5} ATE in ({:.3}, {:.3})",
            est.point_lower, est.point_upper
        );
    }
    Ok(())
}
