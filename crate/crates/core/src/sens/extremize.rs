//! Extremes of a weighted mean `sum(y u z) / sum(u z)` over a box of `z`.
//!
//! The objective is linear-fractional, so its optimum sits at a vertex of the
//! box. At the maximizer every unit with `y` above the optimal value takes
//! its upper bound and every unit below takes its lower bound: after sorting
//! by `y` the optimum is one of `m + 1` thresholds, all of which are scored
//! with prefix sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extremum {
    pub value: f64,
    /// Optimal `z`, in the caller's unit order.
    pub z: Vec<f64>,
}

/// Exact optimum of the weighted mean of `y` with weights `u * z`,
/// `z_lo <= z <= z_hi`.
pub fn extremize_weighted_mean(
    y: &[f64],
    u: &[f64],
    z_lo: &[f64],
    z_hi: &[f64],
    direction: Direction,
) -> Result<Extremum> {
    let m = y.len();
    if m == 0 {
        return Err(Error::Empty("weighted mean over zero units".into()));
    }
    if u.len() != m || z_lo.len() != m || z_hi.len() != m {
        return Err(Error::Dimension("y, u, z_lo and z_hi must have equal length".into()));
    }
    for i in 0..m {
        if !(u[i] > 0.0) || !(z_lo[i] > 0.0) || !(z_lo[i] <= z_hi[i]) || !z_hi[i].is_finite() {
            return Err(Error::Domain(format!(
                "unit {i}: need u > 0 and 0 < z_lo <= z_hi (u={}, z_lo={}, z_hi={})",
                u[i], z_lo[i], z_hi[i]
            )));
        }
    }
    let arm = SortedArm::new(y, u);
    let (lo, hi) = (arm.permute(z_lo), arm.permute(z_hi));
    let best = arm.best_threshold(&lo, &hi, direction);

    let mut z = vec![0.0; m];
    for (rank, &i) in arm.order.iter().enumerate() {
        let upper = match direction {
            Direction::Max => rank < best.threshold,
            Direction::Min => rank >= best.threshold,
        };
        z[i] = if upper { z_hi[i] } else { z_lo[i] };
    }
    Ok(Extremum { value: best.value, z })
}

pub(crate) struct Threshold {
    pub value: f64,
    /// Number of leading (largest-`y`) units on one side of the cut.
    pub threshold: usize,
}

/// One arm's outcomes and base weights, sorted by decreasing outcome. Reused
/// across sensitivity levels; only the bounds change between calls.
#[derive(Debug, Clone)]
pub(crate) struct SortedArm {
    /// Permutation: `order[rank]` is the original index.
    pub order: Vec<usize>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    constant: bool,
}

impl SortedArm {
    pub fn new(y: &[f64], u: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..y.len()).collect();
        // stable, so equal outcomes keep input order
        order.sort_by(|&a, &b| y[b].total_cmp(&y[a]));
        let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let constant = ys.first() == ys.last();
        Self {
            u: order.iter().map(|&i| u[i]).collect(),
            y: ys,
            order,
            constant,
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn permute(&self, v: &[f64]) -> Vec<f64> {
        self.order.iter().map(|&i| v[i]).collect()
    }

    /// Plain weighted mean with `z = 1`.
    pub fn mean(&self) -> f64 {
        if self.constant {
            return self.y[0];
        }
        let num: f64 = self.y.iter().zip(&self.u).map(|(y, u)| y * u).sum();
        let den: f64 = self.u.iter().sum();
        num / den
    }

    /// `lo` and `hi` are in sorted order.
    pub fn best_threshold(&self, lo: &[f64], hi: &[f64], direction: Direction) -> Threshold {
        let m = self.len();
        if self.constant {
            let threshold = match direction {
                Direction::Max => m,
                Direction::Min => 0,
            };
            return Threshold {
                value: self.y[0],
                threshold,
            };
        }
        // weights for the leading block and the trailing block
        let (lead, trail) = match direction {
            Direction::Max => (hi, lo),
            Direction::Min => (lo, hi),
        };
        let mut suffix_num = vec![0.0; m + 1];
        let mut suffix_den = vec![0.0; m + 1];
        for i in (0..m).rev() {
            let w = self.u[i] * trail[i];
            suffix_num[i] = suffix_num[i + 1] + self.y[i] * w;
            suffix_den[i] = suffix_den[i + 1] + w;
        }
        let mut best = Threshold {
            value: suffix_num[0] / suffix_den[0],
            threshold: 0,
        };
        let (mut num, mut den) = (0.0, 0.0);
        for k in 1..=m {
            let w = self.u[k - 1] * lead[k - 1];
            num += self.y[k - 1] * w;
            den += w;
            let v = (num + suffix_num[k]) / (den + suffix_den[k]);
            let better = match direction {
                Direction::Max => v > best.value,
                Direction::Min => v < best.value,
            };
            if better {
                best = Threshold { value: v, threshold: k };
            }
        }
        best
    }

    /// Optimum plus the delta-method standard error of the weighted mean at
    /// the optimal weights, treating units as i.i.d. draws.
    pub fn best_with_se(&self, lo: &[f64], hi: &[f64], direction: Direction) -> (f64, f64) {
        let best = self.best_threshold(lo, hi, direction);
        let (mut num, mut den) = (0.0, 0.0);
        for rank in 0..self.len() {
            let upper = match direction {
                Direction::Max => rank < best.threshold,
                Direction::Min => rank >= best.threshold,
            };
            let w = self.u[rank] * if upper { hi[rank] } else { lo[rank] };
            num += (w * (self.y[rank] - best.value)).powi(2);
            den += w;
        }
        (best.value, num.sqrt() / den)
    }
}
