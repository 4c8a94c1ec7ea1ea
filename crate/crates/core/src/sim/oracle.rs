//! Population-scale approximation of the partially identified interval,
//! using the true GPS of each simulated unit instead of a fitted one.

use serde::{Deserialize, Serialize};

use super::dgp::{Dgp, NUM_ARMS};
use super::ORACLE_TAG;
use crate::data::ContrastSpec;
use crate::error::{Error, Result};
use crate::rng;
use crate::sens::{SensitivityProblem, SensitivitySpec};

pub const MIN_ORACLE_N: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleInterval {
    pub gamma0: f64,
    pub lower: f64,
    pub upper: f64,
    /// Monte Carlo standard errors of the endpoints, from the linearized
    /// variance of the weighted means at the optimal weights.
    pub se_lower: f64,
    pub se_upper: f64,
}

/// A large simulated population, prepared once and queried for any number
/// of contrasts and sensitivity levels.
#[derive(Debug, Clone)]
pub struct OraclePopulation {
    problem: SensitivityProblem,
    n: usize,
}

impl OraclePopulation {
    /// Units are drawn one at a time from a single stream, so the population
    /// of size `2N` extends the one of size `N`.
    pub fn draw(dgp: &Dgp, n: usize, seed: u64) -> Result<Self> {
        if n < MIN_ORACLE_N {
            return Err(Error::Config(format!(
                "oracle population must have at least {MIN_ORACLE_N} units, got {n}"
            )));
        }
        let mut rng = rng::stream(seed, &[ORACLE_TAG]);
        let mut treatment = Vec::with_capacity(n);
        let mut outcome = Vec::with_capacity(n);
        let mut received = Vec::with_capacity(n);
        for _ in 0..n {
            let u = dgp.draw_unit(&mut rng);
            treatment.push(u.arm);
            outcome.push(u.outcome());
            received.push(u.gps[u.arm - 1]);
        }
        let problem = SensitivityProblem::from_parts(&treatment, &outcome, &received, NUM_ARMS)?;
        Ok(Self { problem, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn interval(&self, contrast: &ContrastSpec, gamma0: f64) -> Result<OracleInterval> {
        let spec = SensitivitySpec::risk_ratio(gamma0)?;
        let (est, se_lower, se_upper) = self.problem.interval_with_se(contrast, &spec)?;
        Ok(OracleInterval {
            gamma0,
            lower: est.point_lower,
            upper: est.point_upper,
            se_lower,
            se_upper,
        })
    }
}

/// True interval of `contrast` at `gamma0` under the risk-ratio model,
/// approximated with `n_oracle` units.
pub fn true_partially_identified_interval(
    dgp: &Dgp,
    contrast: &ContrastSpec,
    gamma0: f64,
    n_oracle: usize,
    seed: u64,
) -> Result<OracleInterval> {
    OraclePopulation::draw(dgp, n_oracle, seed)?.interval(contrast, gamma0)
}

/// True intervals for every contrast (outer) and sensitivity level (inner)
/// from one population.
pub fn oracle_grid(
    dgp: &Dgp,
    contrasts: &[ContrastSpec],
    gamma0_grid: &[f64],
    n_oracle: usize,
    seed: u64,
) -> Result<Vec<Vec<OracleInterval>>> {
    let pop = OraclePopulation::draw(dgp, n_oracle, seed)?;
    contrasts
        .iter()
        .map(|c| gamma0_grid.iter().map(|&g| pop.interval(c, g)).collect())
        .collect()
}
