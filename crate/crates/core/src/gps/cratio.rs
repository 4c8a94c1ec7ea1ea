//! Continuation-ratio model: stage `s` models `P(A = s | A >= s, X)` by a
//! binary logit. Backward fits run the same recursion on reversed labels.

use nalgebra::DMatrix;

use super::logistic::{sigmoid, BinaryLogit};
use super::Direction;
use crate::error::{Error, Result};

/// Arm label as seen by the forward recursion.
pub(crate) fn oriented(arm: usize, num_arms: usize, direction: Direction) -> usize {
    match direction {
        Direction::Forward => arm,
        Direction::Backward => num_arms + 1 - arm,
    }
}

/// Design and response of one stage-specific logit.
pub(crate) fn stage_problem(
    x: &DMatrix<f64>,
    arms: &[usize],
    num_arms: usize,
    direction: Direction,
    stage: usize,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let rows: Vec<usize> = (0..arms.len())
        .filter(|&i| oriented(arms[i], num_arms, direction) >= stage)
        .collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|&i| {
            if oriented(arms[i], num_arms, direction) == stage {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    check_stage(&y, stage)?;
    Ok((x.select_rows(rows.iter()), y))
}

fn check_stage(y: &[f64], stage: usize) -> Result<()> {
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == y.len() {
        return Err(Error::StageDegenerate {
            stage,
            message: format!(
                "{} of {} units in the stage subset continue past this stage",
                y.len() - ones,
                y.len()
            ),
        });
    }
    Ok(())
}

/// Stacked design for the shared-slope variant. Columns are `J - 1` stage
/// indicators followed by the covariates without the intercept column.
pub(crate) fn stacked_problem(
    x: &DMatrix<f64>,
    arms: &[usize],
    num_arms: usize,
    direction: Direction,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let stages = num_arms - 1;
    let slopes = x.ncols() - 1;
    let mut values = Vec::new();
    let mut y = Vec::new();
    let mut per_stage: Vec<Vec<f64>> = vec![Vec::new(); stages];
    for (i, &arm) in arms.iter().enumerate() {
        let a = oriented(arm, num_arms, direction);
        for s in 1..=a.min(stages) {
            for k in 1..=stages {
                values.push(if k == s { 1.0 } else { 0.0 });
            }
            values.extend(x.row(i).iter().skip(1));
            let resp = if a == s { 1.0 } else { 0.0 };
            y.push(resp);
            per_stage[s - 1].push(resp);
        }
    }
    for (s, resp) in per_stage.iter().enumerate() {
        check_stage(resp, s + 1)?;
    }
    let design = DMatrix::from_row_slice(y.len(), stages + slopes, &values);
    Ok((design, y))
}

pub(crate) fn stage_logit<'a>(x: &'a DMatrix<f64>, y: Vec<f64>) -> BinaryLogit<'a> {
    BinaryLogit { x, y }
}

/// Assembles arm probabilities from per-unit stage probabilities (forward
/// orientation) and maps them back to the caller's arm order.
pub(crate) fn assemble(stage_eta: &DMatrix<f64>, num_arms: usize, direction: Direction) -> DMatrix<f64> {
    let n = stage_eta.nrows();
    let mut out = DMatrix::zeros(n, num_arms);
    for i in 0..n {
        let mut surviving = 1.0;
        for s in 1..num_arms {
            let p = sigmoid(stage_eta[(i, s - 1)]);
            let arm = oriented(s, num_arms, direction);
            out[(i, arm - 1)] = surviving * p;
            surviving *= 1.0 - p;
        }
        out[(i, oriented(num_arms, num_arms, direction) - 1)] = surviving;
    }
    out
}
