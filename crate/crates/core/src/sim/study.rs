use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::oracle::{oracle_grid, OracleInterval};
use super::{generate_scenario, ScenarioConfig, BOOT_TAG};
use crate::boot::{self, BootstrapConfig};
use crate::data::{ContrastSpec, IntervalEstimate, Severity};
use crate::error::{Error, Result};
use crate::gps::{self, FitOptions, GpsFamily, OVERLAP_WARNING};
use crate::rng;
use crate::sens::SensitivitySpec;

pub const STUDY_VERSION: u32 = 1;

/// Largest tolerated share of failed replicates.
const MAX_FAILURE_RATE: f64 = 0.05;

pub const PCT_BIAS_DEFINITION: &str =
    "100 * mean(estimated bound - true bound) / SD(estimated bound), SD with divisor reps - 1";
pub const NON_COVERAGE_DEFINITION: &str =
    "share of replicates whose bootstrap CI does not contain the whole true interval";

/// One Table-1 style row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub scenario: String,
    pub estimand: String,
    pub gamma0: f64,
    pub true_lower: f64,
    pub true_upper: f64,
    /// `None` when fewer than two replicates succeeded or the bound did not vary.
    pub pct_bias_lower: Option<f64>,
    pub pct_bias_upper: Option<f64>,
    pub non_coverage: f64,
    pub median_point_lower: f64,
    pub median_point_upper: f64,
    pub median_ci_lower: f64,
    pub median_ci_upper: f64,
    pub overlap_warning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub version: u32,
    pub config: ScenarioConfig,
    pub pct_bias_definition: String,
    pub non_coverage_definition: String,
    pub quantile_method: String,
    pub completed_replicates: usize,
    pub failed_replicates: usize,
    /// Smallest fitted GPS over all replicates and units.
    pub min_fitted_gps: f64,
    pub overlap_warning: bool,
    pub rows: Vec<StudyRow>,
}

pub const CSV_HEADER: [&str; 13] = [
    "scenario",
    "estimand",
    "gamma0",
    "true_lower",
    "true_upper",
    "pct_bias_lower",
    "pct_bias_upper",
    "non_coverage",
    "median_point_lower",
    "median_point_upper",
    "median_ci_lower",
    "median_ci_upper",
    "overlap_warning",
];

impl StudyReport {
    pub fn row(&self, estimand: &str, gamma0: f64) -> Option<&StudyRow> {
        self.rows.iter().find(|r| r.estimand == estimand && r.gamma0 == gamma0)
    }

    pub fn to_csv(&self) -> String {
        let na = |v: Option<f64>| v.map_or("NA".to_string(), |v| v.to_string());
        let mut out = CSV_HEADER.join(",");
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.scenario,
                r.estimand,
                r.gamma0,
                r.true_lower,
                r.true_upper,
                na(r.pct_bias_lower),
                na(r.pct_bias_upper),
                r.non_coverage,
                r.median_point_lower,
                r.median_point_upper,
                r.median_ci_lower,
                r.median_ci_upper,
                r.overlap_warning
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct Replicate {
    /// Per (contrast, gamma0) cell, contrast-major.
    estimates: Vec<IntervalEstimate>,
    min_gps: f64,
}

/// Runs the replicate study: each dataset gets a multinomial-logit GPS fit,
/// point intervals over the grid, and bootstrap CIs. Replicates run in
/// parallel with their own streams.
pub fn run_study(config: &ScenarioConfig, contrasts: &[ContrastSpec]) -> Result<StudyReport> {
    config.validate()?;
    if contrasts.is_empty() {
        return Err(Error::Config("no contrasts requested".into()));
    }
    let specs: Vec<SensitivitySpec> = config
        .gamma0_grid
        .iter()
        .map(|&g| SensitivitySpec::risk_ratio(g))
        .collect::<Result<_>>()?;
    let truth = oracle_grid(
        &config.dgp(),
        contrasts,
        &config.gamma0_grid,
        config.oracle_n,
        config.seed,
    )?;

    let results: Vec<Result<Replicate>> = (0..config.reps as u64)
        .into_par_iter()
        .map(|r| run_replicate(config, contrasts, &specs, r))
        .collect();

    let mut ok = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(rep) => ok.push(rep),
            Err(e) => failures.push(e),
        }
    }
    if failures.len() as f64 > MAX_FAILURE_RATE * config.reps as f64 {
        return Err(Error::ReplicateFailures {
            failed: failures.len(),
            total: config.reps,
            first: failures[0].to_string(),
        });
    }
    if ok.is_empty() {
        return Err(Error::ReplicateFailures {
            failed: failures.len(),
            total: config.reps,
            first: "no replicate succeeded".into(),
        });
    }

    let min_fitted_gps = ok.iter().map(|r| r.min_gps).fold(f64::INFINITY, f64::min);
    let overlap_warning = min_fitted_gps < OVERLAP_WARNING;
    let mut rows = Vec::with_capacity(contrasts.len() * specs.len());
    for (c, contrast) in contrasts.iter().enumerate() {
        for (s, true_interval) in truth[c].iter().enumerate() {
            let cell = c * specs.len() + s;
            let est: Vec<&IntervalEstimate> = ok.iter().map(|r| &r.estimates[cell]).collect();
            rows.push(aggregate(config, contrast, true_interval, &est, overlap_warning));
        }
    }

    Ok(StudyReport {
        version: STUDY_VERSION,
        config: config.clone(),
        pct_bias_definition: PCT_BIAS_DEFINITION.into(),
        non_coverage_definition: NON_COVERAGE_DEFINITION.into(),
        quantile_method: boot::QUANTILE_METHOD.into(),
        completed_replicates: ok.len(),
        failed_replicates: failures.len(),
        min_fitted_gps,
        overlap_warning,
        rows,
    })
}

fn run_replicate(
    config: &ScenarioConfig,
    contrasts: &[ContrastSpec],
    specs: &[SensitivitySpec],
    r: u64,
) -> Result<Replicate> {
    let sim = generate_scenario(config, r);
    let ds = sim.dataset;
    let errors: Vec<_> = ds
        .validate()
        .into_iter()
        .filter(|f| f.severity == Severity::Error)
        .collect();
    if !errors.is_empty() {
        return Err(Error::Validation(errors));
    }
    let family = GpsFamily::MultinomialLogit;
    let options = FitOptions::default();
    let model = gps::fit(&ds, &family, &options)?;
    let probs = gps::predict_gps(&model, ds.covariates(), false)?;
    let min_gps = probs.min();
    let boot_config = BootstrapConfig {
        seed: rng::derive_seed(config.seed, &[BOOT_TAG, r]),
        ..config.bootstrap
    };
    let grid = boot::bootstrap_grid_with_gps(&ds, &probs, &family, &options, contrasts, specs, &boot_config)?;
    Ok(Replicate {
        estimates: grid.estimates.into_iter().flatten().collect(),
        min_gps,
    })
}

fn aggregate(
    config: &ScenarioConfig,
    contrast: &ContrastSpec,
    truth: &OracleInterval,
    est: &[&IntervalEstimate],
    overlap_warning: bool,
) -> StudyRow {
    let lower: Vec<f64> = est.iter().map(|e| e.point_lower).collect();
    let upper: Vec<f64> = est.iter().map(|e| e.point_upper).collect();
    let ci_lower: Vec<f64> = est.iter().map(|e| e.ci_lower.expect("bootstrap CI")).collect();
    let ci_upper: Vec<f64> = est.iter().map(|e| e.ci_upper.expect("bootstrap CI")).collect();
    let misses = est
        .iter()
        .filter(|e| e.ci_covers(truth.lower, truth.upper) == Some(false))
        .count();
    StudyRow {
        scenario: config.label.clone(),
        estimand: contrast.label().to_string(),
        gamma0: truth.gamma0,
        true_lower: truth.lower,
        true_upper: truth.upper,
        pct_bias_lower: pct_bias(&lower, truth.lower),
        pct_bias_upper: pct_bias(&upper, truth.upper),
        non_coverage: misses as f64 / est.len() as f64,
        median_point_lower: boot::quantile(&lower, 0.5),
        median_point_upper: boot::quantile(&upper, 0.5),
        median_ci_lower: boot::quantile(&ci_lower, 0.5),
        median_ci_upper: boot::quantile(&ci_upper, 0.5),
        overlap_warning,
    }
}

/// Average bias in units of the Monte Carlo SD, in percent.
pub fn pct_bias(estimates: &[f64], truth: f64) -> Option<f64> {
    let m = estimates.len();
    if m < 2 {
        return None;
    }
    let mean = estimates.iter().sum::<f64>() / m as f64;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    let sd = var.sqrt();
    if sd == 0.0 {
        return None;
    }
    Some(100.0 * (mean - truth) / sd)
}
