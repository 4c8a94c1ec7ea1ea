//! The three-arm simulation design: data generation, population-scale
//! "true" intervals, and the replicate study with bias and coverage summaries.

mod dgp;
mod oracle;
mod study;
pub mod synthetic;

use serde::{Deserialize, Serialize};

pub use dgp::{simulate, Dgp, NormalScale, SimulatedData, Unit, NUM_ARMS, OUTCOME_COEFS};
pub use oracle::{oracle_grid, true_partially_identified_interval, OracleInterval, OraclePopulation, MIN_ORACLE_N};
pub use study::{run_study, StudyReport, StudyRow, STUDY_VERSION};

use crate::boot::BootstrapConfig;
use crate::error::{Error, Result};
use crate::rng;

/// The sensitivity levels of the simulation study.
pub const GAMMA0_GRID: [f64; 6] = [0.0, 0.1, 0.2, 0.5, 1.0, 2.0];

pub(crate) const DATA_TAG: u64 = 1;
pub(crate) const BOOT_TAG: u64 = 2;
pub(crate) const ORACLE_TAG: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub label: String,
    pub n: usize,
    pub k2: f64,
    pub k3: f64,
    #[serde(default)]
    pub x3_scale: NormalScale,
    pub seed: u64,
    pub gamma0_grid: Vec<f64>,
    pub reps: usize,
    pub bootstrap: BootstrapConfig,
    /// Population size for the true intervals.
    pub oracle_n: usize,
}

impl ScenarioConfig {
    /// Adequate overlap, `(k2, k3) = (0.1, -0.1)`, at desk scale.
    pub fn scenario_one(n: usize, seed: u64) -> Self {
        Self::build("I", Dgp::scenario_one(), n, seed)
    }

    /// Limited overlap, `(k2, k3) = (3, 3)`, at desk scale.
    pub fn scenario_two(n: usize, seed: u64) -> Self {
        Self::build("II", Dgp::scenario_two(), n, seed)
    }

    fn build(label: &str, dgp: Dgp, n: usize, seed: u64) -> Self {
        Self {
            label: label.into(),
            n,
            k2: dgp.k2,
            k3: dgp.k3,
            x3_scale: dgp.x3_scale,
            seed,
            gamma0_grid: GAMMA0_GRID.to_vec(),
            reps: 200,
            bootstrap: BootstrapConfig {
                reps: 200,
                alpha: 0.1,
                seed,
                refit_gps: true,
            },
            oracle_n: 1_000_000,
        }
    }

    /// 1000 datasets with 1000 bootstrap resamples each.
    pub fn full_scale(mut self) -> Self {
        self.reps = 1000;
        self.bootstrap.reps = 1000;
        self
    }

    pub fn with_reps(mut self, reps: usize, boot_reps: usize) -> Self {
        self.reps = reps;
        self.bootstrap.reps = boot_reps;
        self
    }

    pub fn dgp(&self) -> Dgp {
        Dgp {
            k2: self.k2,
            k3: self.k3,
            x3_scale: self.x3_scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.gamma0_grid.is_empty() {
            return Err(Error::Config("gamma0 grid is empty".into()));
        }
        if let Some(g) = self.gamma0_grid.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
            return Err(Error::Config(format!("gamma0 values must be finite and >= 0, got {g}")));
        }
        if !(self.k2.is_finite() && self.k3.is_finite()) {
            return Err(Error::Config("k2 and k3 must be finite".into()));
        }
        if self.oracle_n < MIN_ORACLE_N {
            return Err(Error::Config(format!("oracle_n must be at least {MIN_ORACLE_N}")));
        }
        self.bootstrap.validate()
    }
}

/// Dataset `replicate` of a scenario. The stream depends only on
/// `(config.seed, replicate)`.
pub fn generate_scenario(config: &ScenarioConfig, replicate: u64) -> SimulatedData {
    let mut rng = rng::stream(config.seed, &[DATA_TAG, replicate]);
    simulate(&config.dgp(), config.n, &mut rng)
}
