//! Observed (generalized) propensity score models.
//!
//! Three parametric families are supported: the binary logit, the
//! baseline-category multinomial logit, and the continuation-ratio model for
//! ordinal treatments. All are fitted by maximum likelihood with damped
//! Newton steps (IRLS for the binary logit), so the log-likelihood never
//! decreases between iterations.

mod cratio;
mod logistic;
mod multinomial;
mod newton;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::ObservationalDataset;
use crate::error::{Error, Result};
pub use logistic::sigmoid;
use logistic::BinaryLogit;
use multinomial::{softmax_with_reference, MultinomialLogit};
use newton::{check_full_rank, maximize, NewtonOutcome, Objective, Penalized};

pub const MODEL_VERSION: u32 = 1;

/// Probabilities handed downstream are clamped to `[PROB_FLOOR, 1 - PROB_FLOOR]`.
pub const PROB_FLOOR: f64 = 1e-12;

/// Standardized coefficients above this magnitude signal separation.
pub const SEPARATION_THRESHOLD: f64 = 30.0;

/// Ridge used by [`FitOptions::separation_guard`].
pub const ESCAPE_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Stages run from the lowest level upward.
    #[default]
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GpsFamily {
    BinaryLogistic,
    MultinomialLogit,
    ContinuationRatio { direction: Direction, shared_slopes: bool },
}

impl GpsFamily {
    pub fn continuation_ratio() -> Self {
        GpsFamily::ContinuationRatio {
            direction: Direction::Forward,
            shared_slopes: false,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GpsFamily::BinaryLogistic => "binary-logistic",
            GpsFamily::MultinomialLogit => "multinomial-logit",
            GpsFamily::ContinuationRatio { .. } => "continuation-ratio",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct FitOptions {
    /// Ridge penalty on non-intercept coefficients. Zero fits the plain MLE.
    #[serde(default)]
    pub ridge: f64,
}

impl FitOptions {
    pub fn separation_guard() -> Self {
        Self { ridge: ESCAPE_RIDGE }
    }
}

/// A fitted propensity model, serializable as a versioned JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpsModel {
    pub version: u32,
    pub family: GpsFamily,
    pub num_arms: usize,
    pub dim: usize,
    /// Binary: one row. Multinomial: rows for arms 2..=J. Continuation
    /// ratio: one full-length row per stage (shared slopes are repeated).
    pub coefficients: Vec<Vec<f64>>,
    /// Standard errors aligned with [`GpsModel::params`].
    pub std_errors: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
    /// Objective value after each accepted step, one trace per optimization.
    pub traces: Vec<Vec<f64>>,
    pub ridge: f64,
    pub warnings: Vec<String>,
}

impl GpsModel {
    /// Flat parameter vector in the layout used by [`log_likelihood`].
    pub fn params(&self) -> Vec<f64> {
        match self.family {
            GpsFamily::ContinuationRatio {
                shared_slopes: true, ..
            } => {
                let mut p: Vec<f64> = self.coefficients.iter().map(|r| r[0]).collect();
                p.extend_from_slice(&self.coefficients[0][1..]);
                p
            }
            _ => self.coefficients.concat(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: GpsModel = serde_json::from_str(s)?;
        if model.version != MODEL_VERSION {
            return Err(Error::Config(format!(
                "unsupported GPS model version {}",
                model.version
            )));
        }
        Ok(model)
    }
}

// ---------------------------------------------------------------------------
// fitting

pub fn fit_binary_logistic(ds: &ObservationalDataset) -> Result<GpsModel> {
    fit(ds, &GpsFamily::BinaryLogistic, &FitOptions::default())
}

pub fn fit_multinomial_logit(ds: &ObservationalDataset) -> Result<GpsModel> {
    fit(ds, &GpsFamily::MultinomialLogit, &FitOptions::default())
}

/// Forward, stage-specific continuation-ratio fit. `ordered` must be true:
/// the model is only meaningful for ordinal treatments.
pub fn fit_continuation_ratio(ds: &ObservationalDataset, ordered: bool) -> Result<GpsModel> {
    if !ordered {
        return Err(Error::Config(
            "continuation-ratio model requires ordinal treatment levels".into(),
        ));
    }
    fit(ds, &GpsFamily::continuation_ratio(), &FitOptions::default())
}

pub fn fit(ds: &ObservationalDataset, family: &GpsFamily, options: &FitOptions) -> Result<GpsModel> {
    let j = ds.num_arms();
    match family {
        GpsFamily::BinaryLogistic if j != 2 => {
            return Err(Error::Config(format!("binary logistic model needs 2 arms, got {j}")))
        }
        GpsFamily::ContinuationRatio { .. } if j < 3 => {
            return Err(Error::Config(format!(
                "continuation-ratio model needs at least 3 arms, got {j}"
            )))
        }
        GpsFamily::MultinomialLogit if j < 2 => {
            return Err(Error::Config("multinomial logit needs at least 2 arms".into()))
        }
        _ => {}
    }
    let x = ds.covariates();
    check_full_rank(x)?;
    let d = ds.dim();
    let intercept = ds.has_intercept();
    let penal = |dim: usize, is_intercept: &dyn Fn(usize) -> bool| -> Vec<bool> {
        (0..dim).map(|k| !is_intercept(k)).collect()
    };
    let col_is_intercept = |k: usize| intercept && k.is_multiple_of(d);

    let (coefficients, outcomes) = match *family {
        GpsFamily::BinaryLogistic => {
            let obj = Penalized {
                inner: BinaryLogit {
                    x,
                    y: treated_indicator(ds),
                },
                ridge: options.ridge,
                penalized: penal(d, &col_is_intercept),
            };
            let out = maximize(&obj, vec![0.0; d])?;
            (vec![out.params.clone()], vec![out])
        }
        GpsFamily::MultinomialLogit => {
            let obj = Penalized {
                inner: MultinomialLogit {
                    x,
                    arm: ds.treatment(),
                    num_arms: j,
                },
                ridge: options.ridge,
                penalized: penal((j - 1) * d, &col_is_intercept),
            };
            let out = maximize(&obj, vec![0.0; (j - 1) * d])?;
            let rows = out.params.chunks(d).map(<[f64]>::to_vec).collect();
            (rows, vec![out])
        }
        GpsFamily::ContinuationRatio {
            direction,
            shared_slopes: false,
        } => {
            let mut rows = Vec::with_capacity(j - 1);
            let mut outs = Vec::with_capacity(j - 1);
            for stage in 1..j {
                let (xs, y) = cratio::stage_problem(x, ds.treatment(), j, direction, stage)?;
                let obj = Penalized {
                    inner: cratio::stage_logit(&xs, y),
                    ridge: options.ridge,
                    penalized: penal(d, &col_is_intercept),
                };
                let out = maximize(&obj, vec![0.0; d])?;
                rows.push(out.params.clone());
                outs.push(out);
            }
            (rows, outs)
        }
        GpsFamily::ContinuationRatio {
            direction,
            shared_slopes: true,
        } => {
            if !intercept {
                return Err(Error::Config(
                    "shared-slope continuation ratio needs an intercept column".into(),
                ));
            }
            let (xs, y) = cratio::stacked_problem(x, ds.treatment(), j, direction)?;
            let dim = xs.ncols();
            let obj = Penalized {
                inner: cratio::stage_logit(&xs, y),
                ridge: options.ridge,
                penalized: (0..dim).map(|k| k >= j - 1).collect(),
            };
            let out = maximize(&obj, vec![0.0; dim])?;
            let rows = (0..j - 1)
                .map(|s| {
                    let mut r = vec![out.params[s]];
                    r.extend_from_slice(&out.params[j - 1..]);
                    r
                })
                .collect();
            (rows, vec![out])
        }
    };

    Ok(assemble_model(ds, *family, options, coefficients, outcomes))
}

fn assemble_model(
    ds: &ObservationalDataset,
    family: GpsFamily,
    options: &FitOptions,
    coefficients: Vec<Vec<f64>>,
    outcomes: Vec<NewtonOutcome>,
) -> GpsModel {
    let mut warnings = Vec::new();
    let mut converged = outcomes.iter().all(|o| o.converged);
    if !converged {
        warnings.push(format!(
            "optimizer stopped without meeting the convergence test within {} iterations",
            newton::MAX_ITERATIONS
        ));
    }
    if coefficients.iter().flatten().any(|c| !c.is_finite()) {
        converged = false;
        warnings.push("non-finite coefficient".into());
    }
    let sds = column_sds(ds.covariates());
    for (r, row) in coefficients.iter().enumerate() {
        for (k, (&b, &sd)) in row.iter().zip(&sds).enumerate() {
            if sd > 0.0 && (b * sd).abs() > SEPARATION_THRESHOLD {
                converged = false;
                warnings.push(format!(
                    "possible complete separation: standardized coefficient {k} of block {} is {:.1}",
                    r + 1,
                    b * sd
                ));
            }
        }
    }
    GpsModel {
        version: MODEL_VERSION,
        family,
        num_arms: ds.num_arms(),
        dim: ds.dim(),
        coefficients,
        std_errors: outcomes.iter().flat_map(|o| o.std_errors.iter().copied()).collect(),
        converged,
        iterations: outcomes.iter().map(|o| o.iterations).sum(),
        log_likelihood: outcomes.iter().map(|o| o.value).sum(),
        traces: outcomes.into_iter().map(|o| o.trace).collect(),
        ridge: options.ridge,
        warnings,
    }
}

fn treated_indicator(ds: &ObservationalDataset) -> Vec<f64> {
    ds.treatment().iter().map(|&a| if a == 2 { 1.0 } else { 0.0 }).collect()
}

fn column_sds(x: &DMatrix<f64>) -> Vec<f64> {
    let n = x.nrows() as f64;
    x.column_iter()
        .map(|c| {
            let mean = c.sum() / n;
            (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// likelihood evaluation at arbitrary parameters

/// Unpenalized log-likelihood of `family` at a flat parameter vector laid
/// out as [`GpsModel::params`].
pub fn log_likelihood(ds: &ObservationalDataset, family: &GpsFamily, params: &[f64]) -> Result<f64> {
    evaluate(ds, family, params, |obj, p| Ok(obj.value(p)), |a, b| a + b)
}

/// Analytic score (gradient of [`log_likelihood`]).
pub fn score(ds: &ObservationalDataset, family: &GpsFamily, params: &[f64]) -> Result<Vec<f64>> {
    evaluate(
        ds,
        family,
        params,
        |obj, p| Ok(obj.derivatives(p).1.iter().copied().collect::<Vec<_>>()),
        |mut a: Vec<f64>, b| {
            a.extend(b);
            a
        },
    )
}

fn evaluate<T>(
    ds: &ObservationalDataset,
    family: &GpsFamily,
    params: &[f64],
    f: impl Fn(&dyn Objective, &[f64]) -> Result<T>,
    combine: impl Fn(T, T) -> T,
) -> Result<T> {
    let j = ds.num_arms();
    let d = ds.dim();
    let x = ds.covariates();
    let expect = |len: usize| {
        if params.len() != len {
            Err(Error::Dimension(format!(
                "{} parameters supplied, {} expected",
                params.len(),
                len
            )))
        } else {
            Ok(())
        }
    };
    match *family {
        GpsFamily::BinaryLogistic => {
            expect(d)?;
            f(
                &BinaryLogit {
                    x,
                    y: treated_indicator(ds),
                },
                params,
            )
        }
        GpsFamily::MultinomialLogit => {
            expect((j - 1) * d)?;
            f(
                &MultinomialLogit {
                    x,
                    arm: ds.treatment(),
                    num_arms: j,
                },
                params,
            )
        }
        GpsFamily::ContinuationRatio {
            direction,
            shared_slopes: false,
        } => {
            expect((j - 1) * d)?;
            let mut acc: Option<T> = None;
            for stage in 1..j {
                let (xs, y) = cratio::stage_problem(x, ds.treatment(), j, direction, stage)?;
                let v = f(&cratio::stage_logit(&xs, y), &params[(stage - 1) * d..stage * d])?;
                acc = Some(match acc {
                    None => v,
                    Some(a) => combine(a, v),
                });
            }
            Ok(acc.expect("at least one stage"))
        }
        GpsFamily::ContinuationRatio {
            direction,
            shared_slopes: true,
        } => {
            expect(j - 1 + d - 1)?;
            let (xs, y) = cratio::stacked_problem(x, ds.treatment(), j, direction)?;
            f(&cratio::stage_logit(&xs, y), params)
        }
    }
}

// ---------------------------------------------------------------------------
// prediction

/// Arm probabilities (`n x J`) for each row of `covariates`, clamped away
/// from 0 and 1 and renormalized. Non-converged models are refused unless
/// `allow_nonconverged` is set.
pub fn predict_gps(model: &GpsModel, covariates: &DMatrix<f64>, allow_nonconverged: bool) -> Result<DMatrix<f64>> {
    if covariates.ncols() != model.dim {
        return Err(Error::Dimension(format!(
            "model expects {} covariates, got {}",
            model.dim,
            covariates.ncols()
        )));
    }
    if !model.converged && !allow_nonconverged {
        return Err(Error::NotConverged(model.warnings.join("; ")));
    }
    let j = model.num_arms;
    let beta = DMatrix::from_fn(model.dim, model.coefficients.len(), |k, r| model.coefficients[r][k]);
    let eta = covariates * beta;
    let mut probs = match model.family {
        GpsFamily::BinaryLogistic => DMatrix::from_fn(eta.nrows(), 2, |i, a| {
            let p = sigmoid(eta[(i, 0)]);
            if a == 0 {
                1.0 - p
            } else {
                p
            }
        }),
        GpsFamily::MultinomialLogit => {
            let mut out = DMatrix::zeros(eta.nrows(), j);
            let mut row = vec![0.0; j];
            for i in 0..eta.nrows() {
                softmax_with_reference(eta.row(i).iter().copied(), &mut row);
                for a in 0..j {
                    out[(i, a)] = row[a];
                }
            }
            out
        }
        GpsFamily::ContinuationRatio { direction, .. } => cratio::assemble(&eta, j, direction),
    };
    for mut row in probs.row_iter_mut() {
        row.apply(|p| *p = p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR));
        let s = row.sum();
        row /= s;
    }
    Ok(probs)
}

/// Probability each unit's received arm was assigned: `gps[i, A_i - 1]`.
pub fn received_gps(gps: &DMatrix<f64>, treatment: &[usize]) -> Vec<f64> {
    treatment.iter().enumerate().map(|(i, &a)| gps[(i, a - 1)]).collect()
}

// ---------------------------------------------------------------------------
// overlap summary

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmRange {
    pub arm: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpsRangeReport {
    pub arms: Vec<ArmRange>,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    /// Any probability below [`OVERLAP_WARNING`].
    pub overlap_warning: bool,
}

pub const OVERLAP_WARNING: f64 = 0.01;

pub fn gps_range(gps: &DMatrix<f64>) -> GpsRangeReport {
    let n = gps.nrows() as f64;
    let arms: Vec<ArmRange> = gps
        .column_iter()
        .enumerate()
        .map(|(a, c)| ArmRange {
            arm: a + 1,
            min: c.min(),
            mean: c.sum() / n,
            max: c.max(),
        })
        .collect();
    let min = gps.min();
    GpsRangeReport {
        min,
        mean: gps.sum() / gps.len() as f64,
        max: gps.max(),
        overlap_warning: min < OVERLAP_WARNING,
        arms,
    }
}

impl std::fmt::Display for GpsRangeReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "estimated GPS range {:.4} to {:.4}, mean {:.4}",
            self.min, self.max, self.mean
        )?;
        for a in &self.arms {
            writeln!(
                f,
                "  arm {}: min {:.4}  mean {:.4}  max {:.4}",
                a.arm, a.min, a.mean, a.max
            )?;
        }
        if self.overlap_warning {
            writeln!(
                f,
                "warning: some estimated GPSs fall below {OVERLAP_WARNING}; inverse weights may be unstable under limited overlap"
            )?;
        }
        Ok(())
    }
}
