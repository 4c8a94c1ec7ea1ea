//! Risk-ratio sensitivity analysis for inverse-probability-weighted causal
//! effects.
//!
//! Under no unmeasured confounding a stabilized IPW estimate of
//! `tau(c) = sum_a c_a E[Y(a)]` is a contrast of per-arm weighted means. This
//! crate asks how far that estimate can move when each unit's true
//! propensity differs from the fitted one by at most a factor
//! `Gamma0 = exp(gamma0)` (risk-ratio model, with the true propensity kept
//! at or below 1), or by an odds ratio of at most `exp(gamma0)` (the
//! odds-ratio baseline). The answer is an interval of point estimates,
//! computed exactly per arm, with percentile-bootstrap confidence limits on
//! top.
//!
//! ```no_run
//! use rrsens::prelude::*;
//!
//! # fn main() -> rrsens::Result<()> {
//! let sim = generate_scenario(&ScenarioConfig::scenario_one(750, 1), 0);
//! let model = gps::fit_multinomial_logit(&sim.dataset)?;
//! let probs = gps::predict_gps(&model, sim.dataset.covariates(), false)?;
//! let tau12 = ContrastSpec::pairwise(1, 2, 3)?;
//! let est = estimate_interval(&sim.dataset, &probs, &tau12, &SensitivitySpec::risk_ratio(0.5)?)?;
//! println!("({:.3}, {:.3})", est.point_lower, est.point_upper);
//! # Ok(())
//! # }
//! ```
//!
//! Modules:
//!
//! - [`data`]: datasets, CSV ingestion, contrasts, interval results
//! - [`gps`]: propensity models (binary logit, multinomial logit, continuation ratio)
//! - [`sens`]: per-unit bounds and the exact extremization of weighted means
//! - [`boot`]: percentile bootstrap
//! - [`sim`]: the three-arm simulation design, population oracle, study runner
//! - [`cli`]: the `rrsens` command line (`analyze`, `simulate`, `oracle`)

// `!(x >= y)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boot;
pub mod cli;
pub mod data;
pub mod error;
pub mod gps;
pub mod rng;
pub mod sens;
pub mod sim;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::boot::{percentile_bootstrap_ci, BootstrapConfig};
    pub use crate::data::{ContrastSpec, IntervalEstimate, ObservationalDataset, Schema};
    pub use crate::gps::{self, FitOptions, GpsFamily, GpsModel};
    pub use crate::sens::{estimate_interval, ModelFamily, SensitivityProblem, SensitivitySpec};
    pub use crate::sim::{generate_scenario, ScenarioConfig};
}
