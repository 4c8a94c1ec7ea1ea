//! Percentile bootstrap for sensitivity intervals.
//!
//! Each replicate resamples units with replacement, refits the propensity
//! model, and recomputes the interval endpoints `(L_b, U_b)`. The confidence
//! interval is `(q_{alpha/2}(L), q_{1-alpha/2}(U))`, with quantiles taken by
//! linear interpolation between order statistics. Replicate `b` draws from
//! its own stream derived from `(seed, b)`, so the result does not depend on
//! scheduling or thread count.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ContrastSpec, IntervalEstimate, ObservationalDataset, Severity};
use crate::error::{Error, Result};
use crate::gps::{self, FitOptions, GpsFamily};
use crate::rng;
use crate::sens::{SensitivityProblem, SensitivitySpec};

/// Recorded in output metadata.
pub const QUANTILE_METHOD: &str = "linear interpolation between order statistics (type 7)";

/// Total draws allowed per requested replicate.
pub const REDRAW_FACTOR: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    #[serde(default = "default_refit")]
    pub refit_gps: bool,
}

fn default_refit() -> bool {
    true
}

impl BootstrapConfig {
    pub fn new(reps: usize, alpha: f64, seed: u64) -> Result<Self> {
        let c = Self {
            reps,
            alpha,
            seed,
            refit_gps: true,
        };
        c.validate()?;
        Ok(c)
    }

    /// Reuse the original fitted GPS for resampled units. Ignores propensity
    /// estimation uncertainty; meant for diagnostics.
    pub fn without_refit(mut self) -> Self {
        self.refit_gps = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 2 {
            return Err(Error::Config(format!(
                "bootstrap needs at least 2 replicates, got {}",
                self.reps
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        let tail = (self.alpha / 2.0).min(1.0 - self.alpha / 2.0);
        if (self.reps as f64) * tail < 1.0 {
            return Err(Error::Config(format!(
                "{} replicates cannot resolve the {} tail quantile",
                self.reps,
                self.alpha / 2.0
            )));
        }
        Ok(())
    }
}

/// Linear-interpolation quantile of unsorted data, `p` in [0, 1].
pub fn quantile(data: &[f64], p: f64) -> f64 {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, p)
}

pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (h - lo as f64)
}

/// Bootstrap results for every `(contrast, spec)` pair from one set of
/// resamples.
#[derive(Debug, Clone)]
pub struct BootstrapGrid {
    /// `estimates[c][s]` for `contrasts[c]`, `specs[s]`.
    pub estimates: Vec<Vec<IntervalEstimate>>,
    /// Replicate endpoints, `lower[c][s][b]`.
    pub lower: Vec<Vec<Vec<f64>>>,
    pub upper: Vec<Vec<Vec<f64>>>,
    pub total_draws: usize,
}

/// Percentile-bootstrap interval for one contrast and sensitivity level.
pub fn percentile_bootstrap_ci(
    ds: &ObservationalDataset,
    family: &GpsFamily,
    contrast: &ContrastSpec,
    spec: &SensitivitySpec,
    config: &BootstrapConfig,
) -> Result<IntervalEstimate> {
    let grid = bootstrap_grid(
        ds,
        family,
        &FitOptions::default(),
        std::slice::from_ref(contrast),
        std::slice::from_ref(spec),
        config,
    )?;
    Ok(grid.estimates[0][0].clone())
}

/// Bootstrap over a grid of contrasts and sensitivity levels, sharing the
/// resamples and refits across the grid.
pub fn bootstrap_grid(
    ds: &ObservationalDataset,
    family: &GpsFamily,
    options: &FitOptions,
    contrasts: &[ContrastSpec],
    specs: &[SensitivitySpec],
    config: &BootstrapConfig,
) -> Result<BootstrapGrid> {
    let model = gps::fit(ds, family, options)?;
    let probs = gps::predict_gps(&model, ds.covariates(), false)?;
    bootstrap_grid_with_gps(ds, &probs, family, options, contrasts, specs, config)
}

/// As [`bootstrap_grid`], with the original-sample GPS already fitted.
pub fn bootstrap_grid_with_gps(
    ds: &ObservationalDataset,
    probs: &DMatrix<f64>,
    family: &GpsFamily,
    options: &FitOptions,
    contrasts: &[ContrastSpec],
    specs: &[SensitivitySpec],
    config: &BootstrapConfig,
) -> Result<BootstrapGrid> {
    config.validate()?;
    let original = SensitivityProblem::new(ds, probs)?;
    let points = evaluate_grid(&original, contrasts, specs)?;

    let max_draws = REDRAW_FACTOR * config.reps;
    let reps: Vec<(Vec<(f64, f64)>, usize)> = (0..config.reps)
        .into_par_iter()
        .map(|b| {
            replicate(
                ds, probs, family, options, contrasts, specs, config, b as u64, max_draws,
            )
        })
        .collect::<Result<_>>()?;

    let total_draws: usize = reps.iter().map(|(_, d)| d).sum();
    if total_draws > max_draws {
        return Err(instability(total_draws, config.reps));
    }

    let cells = contrasts.len() * specs.len();
    let mut lower = vec![vec![Vec::with_capacity(config.reps); specs.len()]; contrasts.len()];
    let mut upper = lower.clone();
    for (vals, _) in &reps {
        debug_assert_eq!(vals.len(), cells);
        for (k, &(l, u)) in vals.iter().enumerate() {
            lower[k / specs.len()][k % specs.len()].push(l);
            upper[k / specs.len()][k % specs.len()].push(u);
        }
    }

    let a = config.alpha;
    let estimates = points
        .chunks(specs.len())
        .enumerate()
        .map(|(c, row)| {
            row.iter()
                .enumerate()
                .map(|(s, est)| {
                    let lo = quantile(&lower[c][s], a / 2.0);
                    let hi = quantile(&upper[c][s], 1.0 - a / 2.0);
                    est.clone().with_ci(lo, hi, a, config.reps)
                })
                .collect()
        })
        .collect();

    Ok(BootstrapGrid {
        estimates,
        lower,
        upper,
        total_draws,
    })
}

fn instability(draws: usize, reps: usize) -> Error {
    Error::Instability(format!(
        "{draws} resamples were needed for {reps} usable replicates (cap {}); \
         resamples keep losing a treatment arm or failing the GPS fit. \
         Use a larger sample or fewer arms.",
        REDRAW_FACTOR * reps
    ))
}

fn evaluate_grid(
    problem: &SensitivityProblem,
    contrasts: &[ContrastSpec],
    specs: &[SensitivitySpec],
) -> Result<Vec<IntervalEstimate>> {
    let mut out = Vec::with_capacity(contrasts.len() * specs.len());
    for c in contrasts {
        for s in specs {
            out.push(problem.interval(c, s)?);
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn replicate(
    ds: &ObservationalDataset,
    probs: &DMatrix<f64>,
    family: &GpsFamily,
    options: &FitOptions,
    contrasts: &[ContrastSpec],
    specs: &[SensitivitySpec],
    config: &BootstrapConfig,
    b: u64,
    max_draws: usize,
) -> Result<(Vec<(f64, f64)>, usize)> {
    let mut rng = rng::stream(config.seed, &[b]);
    let n = ds.n();
    let mut draws = 0;
    while draws < max_draws {
        draws += 1;
        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let sample = ds.select_rows(&rows);
        if sample.validate().iter().any(|f| f.severity == Severity::Error) {
            continue;
        }
        let sample_probs = if config.refit_gps {
            let fitted =
                gps::fit(&sample, family, options).and_then(|m| gps::predict_gps(&m, sample.covariates(), false));
            match fitted {
                Ok(p) => p,
                Err(_) => continue,
            }
        } else {
            probs.select_rows(rows.iter())
        };
        let Ok(problem) = SensitivityProblem::new(&sample, &sample_probs) else {
            continue;
        };
        match evaluate_grid(&problem, contrasts, specs) {
            Ok(est) => return Ok((est.iter().map(|e| (e.point_lower, e.point_upper)).collect(), draws)),
            Err(_) => continue,
        }
    }
    Err(instability(draws, config.reps))
}
