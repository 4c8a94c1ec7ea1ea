use nalgebra::DMatrix;

use super::bounds::{unit_bounds, SensitivitySpec};
use super::extremize::{Direction, SortedArm};
use crate::data::{ContrastSpec, IntervalEstimate, ObservationalDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct ArmData {
    sorted: SortedArm,
    /// Observed propensity of the received arm, in sorted order.
    e: Vec<f64>,
}

/// Per-arm outcome and weight data prepared once and queried for any number
/// of contrasts and sensitivity levels.
#[derive(Debug, Clone)]
pub struct SensitivityProblem {
    arms: Vec<Option<ArmData>>,
}

impl SensitivityProblem {
    /// `gps` is the `n x J` matrix of observed arm probabilities.
    pub fn new(ds: &ObservationalDataset, gps: &DMatrix<f64>) -> Result<Self> {
        if gps.nrows() != ds.n() || gps.ncols() != ds.num_arms() {
            return Err(Error::Dimension(format!(
                "GPS matrix is {}x{}, dataset needs {}x{}",
                gps.nrows(),
                gps.ncols(),
                ds.n(),
                ds.num_arms()
            )));
        }
        let received = crate::gps::received_gps(gps, ds.treatment());
        Self::from_parts(ds.treatment(), ds.outcome(), &received, ds.num_arms())
    }

    /// Builds from raw columns; `gps_received[i]` is unit `i`'s observed
    /// probability of the arm it received.
    pub fn from_parts(treatment: &[usize], outcome: &[f64], gps_received: &[f64], num_arms: usize) -> Result<Self> {
        if treatment.len() != outcome.len() || treatment.len() != gps_received.len() {
            return Err(Error::Dimension("treatment, outcome and GPS lengths differ".into()));
        }
        let mut ys = vec![Vec::new(); num_arms];
        let mut es = vec![Vec::new(); num_arms];
        for ((&a, &y), &e) in treatment.iter().zip(outcome).zip(gps_received) {
            if !(1..=num_arms).contains(&a) {
                return Err(Error::Domain(format!("treatment label {a} outside 1..={num_arms}")));
            }
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::Domain(format!("observed propensity {e} outside (0, 1)")));
            }
            ys[a - 1].push(y);
            es[a - 1].push(e);
        }
        let arms = ys
            .into_iter()
            .zip(es)
            .map(|(y, e)| {
                if y.is_empty() {
                    return None;
                }
                let u: Vec<f64> = e.iter().map(|e| 1.0 / e).collect();
                let sorted = SortedArm::new(&y, &u);
                let e = sorted.permute(&e);
                Some(ArmData { sorted, e })
            })
            .collect();
        Ok(Self { arms })
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    fn arm(&self, arm: usize) -> Result<&ArmData> {
        self.arms
            .get(arm - 1)
            .and_then(Option::as_ref)
            .ok_or(Error::Positivity { arm })
    }

    /// Stabilized IPW mean of `arm` under no unmeasured confounding.
    pub fn sipw_mean(&self, arm: usize) -> Result<f64> {
        Ok(self.arm(arm)?.sorted.mean())
    }

    /// `(min, max)` of the shifted SIPW mean of `arm` over the sensitivity
    /// model.
    pub fn arm_extremes(&self, arm: usize, spec: &SensitivitySpec) -> Result<(f64, f64)> {
        let data = self.arm(arm)?;
        let (lo, hi): (Vec<f64>, Vec<f64>) = data.e.iter().map(|&e| unit_bounds(e, spec)).unzip();
        let min = data.sorted.best_threshold(&lo, &hi, Direction::Min).value;
        let max = data.sorted.best_threshold(&lo, &hi, Direction::Max).value;
        Ok((min, max))
    }

    /// Interval endpoints with their Monte Carlo standard errors
    /// `(estimate, se_lower, se_upper)`.
    pub fn interval_with_se(
        &self,
        contrast: &ContrastSpec,
        spec: &SensitivitySpec,
    ) -> Result<(IntervalEstimate, f64, f64)> {
        self.check_contrast(contrast)?;
        let (mut lower, mut upper, mut var_lo, mut var_hi) = (0.0, 0.0, 0.0, 0.0);
        for (a, &c) in contrast.coefficients().iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let data = self.arm(a + 1)?;
            let (lo, hi): (Vec<f64>, Vec<f64>) = data.e.iter().map(|&e| unit_bounds(e, spec)).unzip();
            let (min, se_min) = data.sorted.best_with_se(&lo, &hi, Direction::Min);
            let (max, se_max) = data.sorted.best_with_se(&lo, &hi, Direction::Max);
            if c > 0.0 {
                lower += c * min;
                upper += c * max;
                var_lo += (c * se_min).powi(2);
                var_hi += (c * se_max).powi(2);
            } else {
                lower += c * max;
                upper += c * min;
                var_lo += (c * se_max).powi(2);
                var_hi += (c * se_min).powi(2);
            }
        }
        Ok((
            IntervalEstimate::point(lower, upper, spec.gamma0),
            var_lo.sqrt(),
            var_hi.sqrt(),
        ))
    }

    pub fn point_estimate(&self, contrast: &ContrastSpec) -> Result<f64> {
        self.check_contrast(contrast)?;
        let mut total = 0.0;
        for (a, &c) in contrast.coefficients().iter().enumerate() {
            if c != 0.0 {
                total += c * self.sipw_mean(a + 1)?;
            }
        }
        Ok(total)
    }

    /// Range of the contrast over the sensitivity model. Arms are disjoint,
    /// so each endpoint combines per-arm extremes.
    pub fn interval(&self, contrast: &ContrastSpec, spec: &SensitivitySpec) -> Result<IntervalEstimate> {
        self.check_contrast(contrast)?;
        let (mut lower, mut upper) = (0.0, 0.0);
        for (a, &c) in contrast.coefficients().iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let (min, max) = self.arm_extremes(a + 1, spec)?;
            if c > 0.0 {
                lower += c * min;
                upper += c * max;
            } else {
                lower += c * max;
                upper += c * min;
            }
        }
        Ok(IntervalEstimate::point(lower, upper, spec.gamma0))
    }

    fn check_contrast(&self, contrast: &ContrastSpec) -> Result<()> {
        if contrast.num_arms() != self.num_arms() {
            return Err(Error::Dimension(format!(
                "contrast has {} coefficients for {} arms",
                contrast.num_arms(),
                self.num_arms()
            )));
        }
        Ok(())
    }
}

/// Point-estimate interval of `contrast` under `spec`.
pub fn estimate_interval(
    ds: &ObservationalDataset,
    gps: &DMatrix<f64>,
    contrast: &ContrastSpec,
    spec: &SensitivitySpec,
) -> Result<IntervalEstimate> {
    SensitivityProblem::new(ds, gps)?.interval(contrast, spec)
}

/// Plain stabilized IPW estimate of `contrast`.
pub fn sipw_estimate(ds: &ObservationalDataset, gps: &DMatrix<f64>, contrast: &ContrastSpec) -> Result<f64> {
    SensitivityProblem::new(ds, gps)?.point_estimate(contrast)
}
