//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use rrsens::data::ObservationalDataset;
use rrsens::sens::Direction;

/// Random observational dataset: intercept plus two normal covariates, arms
/// drawn from a softmax with random slopes, and a continuous outcome that
/// depends on arm and covariates. Every arm has at least two units.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, j: usize) -> ObservationalDataset {
    let normal = Normal::new(0.0, 1.0).unwrap();
    loop {
        let slopes: Vec<[f64; 3]> = (0..j)
            .map(|a| {
                if a == 0 {
                    [0.0; 3]
                } else {
                    [
                        rng.random_range(-0.5..0.5),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    ]
                }
            })
            .collect();
        let x = DMatrix::from_fn(n, 3, |_, k| if k == 0 { 1.0 } else { normal.sample(rng) });
        let mut treatment = Vec::with_capacity(n);
        let mut outcome = Vec::with_capacity(n);
        for i in 0..n {
            let eta: Vec<f64> = slopes
                .iter()
                .map(|b| b[0] + b[1] * x[(i, 1)] + b[2] * x[(i, 2)])
                .collect();
            let total: f64 = eta.iter().map(|e| e.exp()).sum();
            let mut u = rng.random::<f64>() * total;
            let mut arm = j;
            for (a, e) in eta.iter().enumerate() {
                if u < e.exp() {
                    arm = a + 1;
                    break;
                }
                u -= e.exp();
            }
            treatment.push(arm);
            outcome.push(arm as f64 * 0.3 + x[(i, 1)] - 0.5 * x[(i, 2)] + normal.sample(rng));
        }
        let mut sizes = vec![0; j];
        for &a in &treatment {
            sizes[a - 1] += 1;
        }
        if sizes.iter().all(|&s| s >= 2) {
            return ObservationalDataset::new(x, treatment, outcome, j).unwrap();
        }
    }
}

/// Extreme weighted mean by enumerating all `2^m` vertices of the box.
pub fn vertex_extreme(y: &[f64], u: &[f64], lo: &[f64], hi: &[f64], dir: Direction) -> f64 {
    let m = y.len();
    assert!(m <= 20);
    let mut best = match dir {
        Direction::Max => f64::NEG_INFINITY,
        Direction::Min => f64::INFINITY,
    };
    for mask in 0u32..(1 << m) {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..m {
            let z = if mask >> i & 1 == 1 { hi[i] } else { lo[i] };
            num += y[i] * u[i] * z;
            den += u[i] * z;
        }
        let v = num / den;
        best = match dir {
            Direction::Max => best.max(v),
            Direction::Min => best.min(v),
        };
    }
    best
}

/// Stabilized IPW mean of `arm` computed directly from the received-arm GPS.
pub fn direct_sipw(ds: &ObservationalDataset, gps: &DMatrix<f64>, arm: usize) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..ds.n() {
        if ds.treatment()[i] == arm {
            let w = 1.0 / gps[(i, arm - 1)];
            num += w * ds.outcome()[i];
            den += w;
        }
    }
    num / den
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
