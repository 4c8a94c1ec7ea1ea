use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

/// One invariant violation reported by [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    /// 1-based data row, when the finding is tied to a unit.
    pub row: Option<usize>,
    pub message: String,
}

impl Finding {
    fn error(row: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            row,
            message: message.into(),
        }
    }
}

/// Covariates, treatment arms and outcomes for `n` units.
///
/// Treatment labels are 1-based arm indices in `1..=num_arms`. The original
/// level names (as read from a CSV, say) are kept in `arm_labels`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationalDataset {
    covariates: DMatrix<f64>,
    covariate_names: Vec<String>,
    treatment: Vec<usize>,
    outcome: Vec<f64>,
    num_arms: usize,
    arm_labels: Vec<String>,
}

impl ObservationalDataset {
    /// Builds and validates a dataset. Any error-severity finding is returned
    /// as [`Error::Validation`].
    pub fn new(covariates: DMatrix<f64>, treatment: Vec<usize>, outcome: Vec<f64>, num_arms: usize) -> Result<Self> {
        let ds = Self::new_unchecked(covariates, treatment, outcome, num_arms);
        let findings = ds.validate();
        if findings.iter().any(|f| f.severity == Severity::Error) {
            return Err(Error::Validation(findings));
        }
        Ok(ds)
    }

    /// Builds a dataset without checking invariants. Callers that need a
    /// possibly-invalid dataset (bootstrap resamples, validation tests) use
    /// this and call [`validate`](Self::validate) themselves.
    pub fn new_unchecked(covariates: DMatrix<f64>, treatment: Vec<usize>, outcome: Vec<f64>, num_arms: usize) -> Self {
        let covariate_names = default_names(&covariates);
        let arm_labels = (1..=num_arms).map(|a| a.to_string()).collect();
        Self {
            covariates,
            covariate_names,
            treatment,
            outcome,
            num_arms,
            arm_labels,
        }
    }

    pub fn with_covariate_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.covariates.ncols() {
            return Err(Error::Dimension(format!(
                "{} covariate names for {} columns",
                names.len(),
                self.covariates.ncols()
            )));
        }
        self.covariate_names = names;
        Ok(self)
    }

    pub fn with_arm_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.num_arms {
            return Err(Error::Dimension(format!(
                "{} arm labels for {} arms",
                labels.len(),
                self.num_arms
            )));
        }
        self.arm_labels = labels;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.treatment.len()
    }

    pub fn dim(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    pub fn covariates(&self) -> &DMatrix<f64> {
        &self.covariates
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn treatment(&self) -> &[usize] {
        &self.treatment
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn arm_labels(&self) -> &[String] {
        &self.arm_labels
    }

    /// True when the first covariate column is identically 1.
    pub fn has_intercept(&self) -> bool {
        self.covariates.ncols() > 0 && self.covariates.column(0).iter().all(|&v| v == 1.0)
    }

    /// Unit counts per arm, index `a - 1` for arm `a`. Out-of-range labels
    /// are ignored.
    pub fn arm_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_arms];
        for &a in &self.treatment {
            if (1..=self.num_arms).contains(&a) {
                sizes[a - 1] += 1;
            }
        }
        sizes
    }

    /// Rows (0-based) of the units that received `arm`.
    pub fn arm_rows(&self, arm: usize) -> Vec<usize> {
        self.treatment
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == arm)
            .map(|(i, _)| i)
            .collect()
    }

    /// Unchecked row selection with repetition, as used by resampling.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let covariates = self.covariates.select_rows(rows.iter());
        Self {
            covariates,
            covariate_names: self.covariate_names.clone(),
            treatment: rows.iter().map(|&i| self.treatment[i]).collect(),
            outcome: rows.iter().map(|&i| self.outcome[i]).collect(),
            num_arms: self.num_arms,
            arm_labels: self.arm_labels.clone(),
        }
    }

    pub fn validate(&self) -> Vec<Finding> {
        validate(self)
    }
}

fn default_names(covariates: &DMatrix<f64>) -> Vec<String> {
    (0..covariates.ncols())
        .map(|j| {
            if j == 0 && covariates.nrows() > 0 && covariates.column(0).iter().all(|&v| v == 1.0) {
                "(intercept)".to_string()
            } else {
                format!("x{j}")
            }
        })
        .collect()
}

/// Checks every dataset invariant and returns one finding per violation.
/// An empty list means the dataset is well formed.
pub fn validate(ds: &ObservationalDataset) -> Vec<Finding> {
    let mut findings = Vec::new();
    let n = ds.treatment.len();

    if n == 0 {
        findings.push(Finding::error(None, "dataset has 0 units"));
    }
    if ds.covariates.nrows() != n {
        findings.push(Finding::error(
            None,
            format!(
                "covariate matrix has {} rows but treatment has {n}",
                ds.covariates.nrows()
            ),
        ));
    }
    if ds.outcome.len() != n {
        findings.push(Finding::error(
            None,
            format!("outcome has {} rows but treatment has {n}", ds.outcome.len()),
        ));
    }
    if ds.covariates.ncols() == 0 {
        findings.push(Finding::error(None, "no covariate columns"));
    }
    if ds.num_arms < 2 {
        findings.push(Finding::error(
            None,
            format!("{} treatment arm(s); at least 2 are required", ds.num_arms),
        ));
    }

    for (i, &a) in ds.treatment.iter().enumerate() {
        if !(1..=ds.num_arms).contains(&a) {
            findings.push(Finding::error(
                Some(i + 1),
                format!("row {}: treatment label {a} outside 1..={}", i + 1, ds.num_arms),
            ));
        }
    }
    for (a, size) in ds.arm_sizes().iter().enumerate() {
        if *size == 0 {
            findings.push(Finding::error(None, format!("arm {} has 0 units", a + 1)));
        }
    }

    for (i, y) in ds.outcome.iter().enumerate() {
        if !y.is_finite() {
            findings.push(Finding::error(Some(i + 1), format!("row {}: outcome is {y}", i + 1)));
        }
    }
    if ds.covariates.nrows() == n {
        for i in 0..n {
            for (j, v) in ds.covariates.row(i).iter().enumerate() {
                if !v.is_finite() {
                    findings.push(Finding::error(
                        Some(i + 1),
                        format!(
                            "row {}: covariate `{}` is {v}",
                            i + 1,
                            ds.covariate_names.get(j).map(String::as_str).unwrap_or("?")
                        ),
                    ));
                }
            }
        }
    }
    findings
}
