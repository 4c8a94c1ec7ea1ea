//! Three-arm data-generating process with multinomial-logit treatment
//! assignment and a multinomial draw of the potential-outcome category.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::ObservationalDataset;

pub const NUM_ARMS: usize = 3;

/// Outcome coefficients `delta_1..delta_3` on `(1, X1, X2, X3)`.
pub const OUTCOME_COEFS: [[f64; 4]; 3] = [[1.0, 1.0, 1.0, 1.0], [1.0, 1.0, -1.0, 1.0], [1.0, 1.0, 1.0, -1.0]];

/// How the `0.5` in `X3 ~ N(0, 0.5)` is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NormalScale {
    /// Standard deviation 0.5.
    #[default]
    StdDev,
    /// Variance 0.5, standard deviation `sqrt(0.5)`.
    Variance,
}

impl NormalScale {
    pub fn std_dev(&self) -> f64 {
        match self {
            NormalScale::StdDev => 0.5,
            NormalScale::Variance => 0.5f64.sqrt(),
        }
    }
}

/// Overlap knobs of the design: `beta_2 = k2 (0,1,1,1)`, `beta_3 = k3 (0,1,1,-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dgp {
    pub k2: f64,
    pub k3: f64,
    #[serde(default)]
    pub x3_scale: NormalScale,
}

impl Dgp {
    /// Adequate overlap.
    pub fn scenario_one() -> Self {
        Self {
            k2: 0.1,
            k3: -0.1,
            x3_scale: NormalScale::StdDev,
        }
    }

    /// Limited overlap.
    pub fn scenario_two() -> Self {
        Self {
            k2: 3.0,
            k3: 3.0,
            x3_scale: NormalScale::StdDev,
        }
    }

    /// Treatment coefficients `beta_1..beta_3`.
    pub fn treatment_coefs(&self) -> [[f64; 4]; 3] {
        [
            [0.0; 4],
            [0.0, self.k2, self.k2, self.k2],
            [0.0, self.k3, self.k3, -self.k3],
        ]
    }

    /// Arm probabilities at covariate vector `x = (1, x1, x2, x3)`.
    pub fn treatment_probs(&self, x: &[f64; 4]) -> [f64; 3] {
        softmax(&self.treatment_coefs(), x)
    }

    /// `P(C = a | x)` for the potential-outcome category `C`.
    pub fn outcome_probs(x: &[f64; 4]) -> [f64; 3] {
        softmax(&OUTCOME_COEFS, x)
    }

    /// Draws one unit. The draw order (X1, X2, X3, treatment, category) is
    /// fixed so that a stream prefix always yields the same units.
    pub fn draw_unit<R: Rng>(&self, rng: &mut R) -> Unit {
        let normal = Normal::new(0.0, self.x3_scale.std_dev()).expect("positive sd");
        let x1 = if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 };
        let x2 = rng.random_range(-1.0..1.0);
        let x3 = normal.sample(rng);
        let x = [1.0, x1, x2, x3];
        let gps = self.treatment_probs(&x);
        let arm = categorical(&gps, rng.random());
        let category = categorical(&Self::outcome_probs(&x), rng.random());
        Unit { x, gps, arm, category }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unit {
    pub x: [f64; 4],
    pub gps: [f64; 3],
    /// Received arm, 1-based.
    pub arm: usize,
    /// Potential-outcome category, 1-based; `Y(a) = 1{category == a}`.
    pub category: usize,
}

impl Unit {
    pub fn outcome(&self) -> f64 {
        if self.arm == self.category {
            1.0
        } else {
            0.0
        }
    }
}

fn softmax(coefs: &[[f64; 4]; 3], x: &[f64; 4]) -> [f64; 3] {
    let eta: Vec<f64> = coefs
        .iter()
        .map(|b| b.iter().zip(x).map(|(b, x)| b * x).sum())
        .collect();
    let max = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ex: Vec<f64> = eta.iter().map(|e| (e - max).exp()).collect();
    let s: f64 = ex.iter().sum();
    [ex[0] / s, ex[1] / s, ex[2] / s]
}

/// Index (1-based) of the category selected by a uniform draw `u`.
fn categorical(probs: &[f64; 3], u: f64) -> usize {
    let mut acc = 0.0;
    for (a, p) in probs.iter().enumerate().take(NUM_ARMS - 1) {
        acc += p;
        if u < acc {
            return a + 1;
        }
    }
    NUM_ARMS
}

/// A simulated dataset with its latent quantities.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub dataset: ObservationalDataset,
    /// True arm probabilities, `n x 3`.
    pub true_gps: DMatrix<f64>,
    /// `Y(a)` for every unit and arm, `n x 3`.
    pub potential_outcomes: DMatrix<f64>,
}

/// Draws `n` units. The dataset is returned unchecked: with tiny `n` an arm
/// may be empty, which downstream fitting reports.
pub fn simulate<R: Rng>(dgp: &Dgp, n: usize, rng: &mut R) -> SimulatedData {
    let units: Vec<Unit> = (0..n).map(|_| dgp.draw_unit(rng)).collect();
    let covariates = DMatrix::from_fn(n, 4, |i, k| units[i].x[k]);
    let true_gps = DMatrix::from_fn(n, 3, |i, a| units[i].gps[a]);
    let potential_outcomes = DMatrix::from_fn(n, 3, |i, a| if units[i].category == a + 1 { 1.0 } else { 0.0 });
    let dataset = ObservationalDataset::new_unchecked(
        covariates,
        units.iter().map(|u| u.arm).collect(),
        units.iter().map(Unit::outcome).collect(),
        NUM_ARMS,
    )
    .with_covariate_names(vec!["(intercept)".into(), "x1".into(), "x2".into(), "x3".into()])
    .expect("four names");
    SimulatedData {
        dataset,
        true_gps,
        potential_outcomes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_knobs_give_uniform_gps() {
        let dgp = Dgp {
            k2: 0.0,
            k3: 0.0,
            x3_scale: NormalScale::StdDev,
        };
        let p = dgp.treatment_probs(&[1.0, 1.0, -0.3, 0.9]);
        for v in p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn outcome_probs_direct_evaluation() {
        let x = [1.0, 1.0, 0.5, 0.2];
        let p = Dgp::outcome_probs(&x);
        let (a, b, c) = (2.7f64.exp(), 1.7f64.exp(), 2.3f64.exp());
        let s = a + b + c;
        assert!((p[0] - a / s).abs() < 1e-15);
        assert!((p[1] - b / s).abs() < 1e-15);
        assert!((p[2] - c / s).abs() < 1e-15);
    }

    #[test]
    fn treatment_probs_scenario_two_direct_evaluation() {
        let x = [1.0, 1.0, 0.5, 0.2];
        let p = Dgp::scenario_two().treatment_probs(&x);
        // linear predictors (0, 5.1, 3.9)
        let (a, b, c) = (1.0, 5.1f64.exp(), 3.9f64.exp());
        let s = a + b + c;
        assert!((p[0] - a / s).abs() < 1e-15);
        assert!((p[1] - b / s).abs() < 1e-15);
        assert!((p[2] - c / s).abs() < 1e-15);
        assert!((p[0] - 0.004664).abs() < 1e-6);
        assert!((p[1] - 0.764941).abs() < 1e-6);
        assert!((p[2] - 0.230396).abs() < 1e-6);
    }

    #[test]
    fn observed_outcome_uses_received_arm() {
        let u = Unit {
            x: [1.0; 4],
            gps: [0.2, 0.3, 0.5],
            arm: 2,
            category: 2,
        };
        assert_eq!(u.outcome(), 1.0);
        assert_eq!(Unit { category: 3, ..u }.outcome(), 0.0);
    }

    #[test]
    fn categorical_boundaries() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(categorical(&p, 0.0), 1);
        assert_eq!(categorical(&p, 0.2), 2);
        assert_eq!(categorical(&p, 0.49), 2);
        assert_eq!(categorical(&p, 0.999), 3);
    }
}
