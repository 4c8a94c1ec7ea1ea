//! Damped Newton maximization shared by every GPS family.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) const MAX_ITERATIONS: usize = 100;
const MAX_HALVINGS: usize = 20;
const COEF_TOL: f64 = 1e-8;
const REL_LL_TOL: f64 = 1e-10;
/// Score max-norm required before a small step counts as convergence.
const GRAD_TOL: f64 = 1e-10;
const MAX_POLISH: usize = 3;

/// A concave log-likelihood in a flat parameter vector.
pub(crate) trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, params: &[f64]) -> f64;

    /// Value, gradient and Fisher information (negative Hessian).
    fn derivatives(&self, params: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>);
}

/// Quadratic ridge on selected coordinates, wrapped around an objective.
pub(crate) struct Penalized<O> {
    pub inner: O,
    pub ridge: f64,
    pub penalized: Vec<bool>,
}

impl<O: Objective> Objective for Penalized<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, params: &[f64]) -> f64 {
        let pen: f64 = params
            .iter()
            .zip(&self.penalized)
            .filter(|(_, &p)| p)
            .map(|(b, _)| b * b)
            .sum();
        self.inner.value(params) - 0.5 * self.ridge * pen
    }

    fn derivatives(&self, params: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let (mut v, mut g, mut h) = self.inner.derivatives(params);
        for (k, &p) in self.penalized.iter().enumerate() {
            if p {
                v -= 0.5 * self.ridge * params[k] * params[k];
                g[k] -= self.ridge * params[k];
                h[(k, k)] += self.ridge;
            }
        }
        (v, g, h)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome {
    pub params: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub value: f64,
    pub trace: Vec<f64>,
    /// Square roots of the diagonal of the inverse information at `params`.
    pub std_errors: Vec<f64>,
}

pub(crate) fn maximize<O: Objective>(obj: &O, init: Vec<f64>) -> Result<NewtonOutcome> {
    debug_assert_eq!(init.len(), obj.dim());
    let mut params = init;
    let mut value = obj.value(&params);
    let mut trace = vec![value];
    let mut converged = false;
    // the step test passed; confirm with the score at the new point
    let mut settled = false;
    let mut polish = 0;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (v, grad, info) = obj.derivatives(&params);
        value = v;
        if settled && grad.amax() < GRAD_TOL {
            converged = true;
            break;
        }
        let chol = match info.cholesky() {
            Some(c) => c,
            // weights collapsed after some progress: typical of separation
            None if iterations > 1 => break,
            None => return Err(Error::Singular("information matrix is not positive definite".into())),
        };
        let mut step = chol.solve(&grad);
        let mut trial: Vec<f64> = params.iter().zip(step.iter()).map(|(b, s)| b + s).collect();
        let mut trial_value = obj.value(&trial);

        // Near the optimum the ascent of a Newton step drops below the
        // rounding error of the objective and the line search can no longer
        // tell better from worse. Take full steps there to polish the score.
        let noise = 1e-12 * value.abs().max(1.0);
        if settled || grad.dot(&step) < noise {
            polish += 1;
            if !(trial_value >= value - noise) || polish > MAX_POLISH {
                converged = true;
                break;
            }
            params = trial;
            if trial_value > value {
                trace.push(trial_value);
            }
            value = trial_value;
            settled = true;
            continue;
        }

        let mut halvings = 0;
        while !(trial_value >= value) && halvings < MAX_HALVINGS {
            step *= 0.5;
            trial = params.iter().zip(step.iter()).map(|(b, s)| b + s).collect();
            trial_value = obj.value(&trial);
            halvings += 1;
        }
        if !(trial_value >= value) {
            // no ascent left at floating-point resolution
            converged = grad.amax() < 1e-6;
            break;
        }

        let max_change = step.amax();
        let rel_change = (trial_value - value).abs() / value.abs().max(f64::MIN_POSITIVE);
        params = trial;
        value = trial_value;
        trace.push(value);
        settled = max_change < COEF_TOL || rel_change < REL_LL_TOL;
    }
    if settled && iterations >= MAX_ITERATIONS {
        converged = true;
    }

    let (_, _, info) = obj.derivatives(&params);
    let std_errors = match info.try_inverse() {
        Some(inv) => (0..inv.nrows()).map(|k| inv[(k, k)].max(0.0).sqrt()).collect(),
        None => vec![f64::NAN; params.len()],
    };

    Ok(NewtonOutcome {
        params,
        converged,
        iterations,
        value,
        trace,
        std_errors,
    })
}

/// Rejects designs whose columns are (numerically) linearly dependent.
pub(crate) fn check_full_rank(x: &DMatrix<f64>) -> Result<()> {
    let d = x.ncols();
    if x.nrows() < d {
        return Err(Error::Singular(format!(
            "{} rows cannot identify {d} coefficients",
            x.nrows()
        )));
    }
    let gram = x.transpose() * x;
    let scale: Vec<f64> = (0..d).map(|k| gram[(k, k)].sqrt()).collect();
    if let Some(k) = scale.iter().position(|&s| s == 0.0) {
        return Err(Error::Singular(format!("design column {k} is identically zero")));
    }
    let corr = DMatrix::from_fn(d, d, |i, j| gram[(i, j)] / (scale[i] * scale[j]));
    let eig = corr.symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min < 1e-10 {
        return Err(Error::Singular(format!(
            "design matrix is rank deficient (smallest scaled eigenvalue {min:.3e})"
        )));
    }
    Ok(())
}
