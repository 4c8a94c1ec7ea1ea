//! Sensitivity bounds and extremization of shifted SIPW estimates.

mod bounds;
mod extremize;
mod interval;

pub use bounds::{compute_z_bounds, shifted_propensity, ModelFamily, SensitivitySpec, UnitBounds};
pub use extremize::{extremize_weighted_mean, Direction, Extremum};
pub use interval::{estimate_interval, sipw_estimate, SensitivityProblem};
