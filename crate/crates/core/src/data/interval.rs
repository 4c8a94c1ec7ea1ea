use serde::{Deserialize, Serialize};

/// Range of point estimates under a sensitivity model, plus an optional
/// percentile-bootstrap confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub point_lower: f64,
    pub point_upper: f64,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub alpha: Option<f64>,
    pub bootstrap_reps: Option<usize>,
    /// Log-scale sensitivity parameter actually used.
    pub gamma0: f64,
}

impl IntervalEstimate {
    pub fn point(point_lower: f64, point_upper: f64, gamma0: f64) -> Self {
        debug_assert!(point_lower <= point_upper, "{point_lower} > {point_upper}");
        Self {
            point_lower,
            point_upper,
            ci_lower: None,
            ci_upper: None,
            alpha: None,
            bootstrap_reps: None,
            gamma0,
        }
    }

    pub fn with_ci(mut self, lower: f64, upper: f64, alpha: f64, reps: usize) -> Self {
        debug_assert!(lower <= upper, "{lower} > {upper}");
        self.ci_lower = Some(lower);
        self.ci_upper = Some(upper);
        self.alpha = Some(alpha);
        self.bootstrap_reps = Some(reps);
        self
    }

    pub fn width(&self) -> f64 {
        self.point_upper - self.point_lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.point_lower + self.point_upper)
    }

    /// Does the CI contain the whole interval `[lower, upper]`?
    pub fn ci_covers(&self, lower: f64, upper: f64) -> Option<bool> {
        Some(self.ci_lower? <= lower && self.ci_upper? >= upper)
    }
}
