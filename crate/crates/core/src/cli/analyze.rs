use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::boot::{self, BootstrapConfig};
use crate::data::{ContrastSpec, IntervalEstimate, ObservationalDataset};
use crate::error::{Error, Result};
use crate::gps::{self, FitOptions, GpsFamily, GpsModel, GpsRangeReport};
use crate::sens::{ModelFamily, SensitivityProblem, SensitivitySpec};

pub const RESULTS_VERSION: u32 = 1;

/// Ratio-scale sweep used when no grid is given.
pub const DEFAULT_RATIO_GRID: [f64; 8] = [1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75];

/// One sensitivity level on both scales, as the user wrote it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    #[serde(rename = "Gamma0")]
    pub ratio: f64,
    pub gamma0: f64,
}

/// Builds the grid from either scale; with neither, the default ratio sweep.
pub fn sensitivity_grid(gamma0: Option<&[f64]>, ratio: Option<&[f64]>) -> Result<Vec<GridPoint>> {
    let grid: Vec<GridPoint> = match (gamma0, ratio) {
        (Some(_), Some(_)) => return Err(Error::Config("give either a gamma0 or a Gamma0 grid, not both".into())),
        (Some(g), None) => g
            .iter()
            .map(|&g| GridPoint {
                ratio: g.exp(),
                gamma0: g,
            })
            .collect(),
        (None, r) => r
            .unwrap_or(&DEFAULT_RATIO_GRID)
            .iter()
            .map(|&r| GridPoint {
                ratio: r,
                gamma0: r.ln(),
            })
            .collect(),
    };
    if grid.is_empty() {
        return Err(Error::Config("sensitivity grid is empty".into()));
    }
    for p in &grid {
        if !(p.ratio >= 1.0 && p.gamma0 >= 0.0 && p.gamma0.is_finite()) {
            return Err(Error::Config(format!(
                "sensitivity level Gamma0 = {} (gamma0 = {}) is below 1 or not finite",
                p.ratio, p.gamma0
            )));
        }
    }
    Ok(grid)
}

/// Resolves `a:b`, where each side is an arm label or a 1-based arm index.
pub fn parse_contrast(spec: &str, ds: &ObservationalDataset) -> Result<ContrastSpec> {
    let (a, b) = spec
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("contrast `{spec}` is not of the form a:b")))?;
    let arm = |s: &str| -> Result<usize> {
        let s = s.trim();
        if let Some(p) = ds.arm_labels().iter().position(|l| l == s) {
            return Ok(p + 1);
        }
        s.parse::<usize>()
            .map_err(|_| Error::Config(format!("contrast `{spec}`: `{s}` is neither an arm label nor an index")))
    };
    ContrastSpec::pairwise(arm(a)?, arm(b)?, ds.num_arms())
}

#[derive(Debug, Clone)]
pub struct AnalysisSettings {
    pub gps_family: GpsFamily,
    pub fit: FitOptions,
    pub contrasts: Vec<ContrastSpec>,
    pub grid: Vec<GridPoint>,
    pub models: Vec<ModelFamily>,
    /// `None` skips the bootstrap.
    pub bootstrap: Option<BootstrapConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub estimand: String,
    pub family: String,
    #[serde(rename = "Gamma0")]
    pub ratio: f64,
    pub estimate: IntervalEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub version: u32,
    pub quantile_method: String,
    pub gps_family: GpsFamily,
    pub n: usize,
    pub arm_labels: Vec<String>,
    pub arm_sizes: Vec<usize>,
    pub gps_range: GpsRangeReport,
    pub bootstrap: Option<BootstrapConfig>,
    pub bootstrap_draws: Option<usize>,
    pub rows: Vec<ResultRow>,
}

/// Fits the GPS, evaluates every (model, contrast, level) cell, and attaches
/// bootstrap CIs from one shared set of resamples.
pub fn run_analysis(ds: &ObservationalDataset, settings: &AnalysisSettings) -> Result<(AnalysisReport, GpsModel)> {
    if settings.contrasts.is_empty() {
        return Err(Error::Config("no contrasts requested".into()));
    }
    let model = gps::fit(ds, &settings.gps_family, &settings.fit)?;
    let probs = gps::predict_gps(&model, ds.covariates(), false)?;
    let gps_range = gps::gps_range(&probs);

    let specs: Vec<SensitivitySpec> = settings
        .models
        .iter()
        .flat_map(|&m| settings.grid.iter().map(move |p| SensitivitySpec::new(p.gamma0, m)))
        .collect::<Result<_>>()?;
    let (estimates, draws) = match &settings.bootstrap {
        Some(cfg) => {
            let grid = boot::bootstrap_grid_with_gps(
                ds,
                &probs,
                &settings.gps_family,
                &settings.fit,
                &settings.contrasts,
                &specs,
                cfg,
            )?;
            (grid.estimates, Some(grid.total_draws))
        }
        None => {
            let problem = SensitivityProblem::new(ds, &probs)?;
            let est = settings
                .contrasts
                .iter()
                .map(|c| specs.iter().map(|s| problem.interval(c, s)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            (est, None)
        }
    };

    let mut rows = Vec::new();
    for (c, contrast) in settings.contrasts.iter().enumerate() {
        for (s, spec) in specs.iter().enumerate() {
            rows.push(ResultRow {
                estimand: contrast.label().to_string(),
                family: spec.family.name().to_string(),
                ratio: settings.grid[s % settings.grid.len()].ratio,
                estimate: estimates[c][s].clone(),
            });
        }
    }
    let report = AnalysisReport {
        version: RESULTS_VERSION,
        quantile_method: boot::QUANTILE_METHOD.into(),
        gps_family: settings.gps_family,
        n: ds.n(),
        arm_labels: ds.arm_labels().to_vec(),
        arm_sizes: ds.arm_sizes(),
        gps_range,
        bootstrap: settings.bootstrap,
        bootstrap_draws: draws,
        rows,
    };
    Ok((report, model))
}

fn opt(v: Option<f64>) -> String {
    v.map_or("NA".into(), |v| v.to_string())
}

pub fn results_csv(report: &AnalysisReport) -> String {
    let mut out =
        String::from("estimand,family,Gamma0,gamma0,point_lower,point_upper,ci_lower,ci_upper,alpha,bootstrap_reps\n");
    for r in &report.rows {
        let e = &r.estimate;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.estimand,
            r.family,
            r.ratio,
            e.gamma0,
            e.point_lower,
            e.point_upper,
            opt(e.ci_lower),
            opt(e.ci_upper),
            opt(e.alpha),
            e.bootstrap_reps.map_or("NA".into(), |b| b.to_string())
        );
    }
    out
}

/// Solid bars are the point intervals, dashed bars the CIs.
pub fn plotdata_csv(report: &AnalysisReport) -> String {
    let mut out = String::from("estimand,family,Gamma0,solid_lower,solid_upper,dashed_lower,dashed_upper,midpoint\n");
    for r in &report.rows {
        let e = &r.estimate;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.estimand,
            r.family,
            r.ratio,
            e.point_lower,
            e.point_upper,
            opt(e.ci_lower),
            opt(e.ci_upper),
            e.midpoint()
        );
    }
    out
}
