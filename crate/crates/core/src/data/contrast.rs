use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients `c` of an additive estimand `sum_a c_a * E[Y(a)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastSpec {
    coefficients: Vec<f64>,
    label: String,
}

impl ContrastSpec {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("contrast coefficients must be finite".into()));
        }
        if coefficients.iter().all(|&c| c == 0.0) {
            return Err(Error::Config("contrast needs at least one nonzero coefficient".into()));
        }
        let label = format!(
            "c({})",
            coefficients.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
        );
        Ok(Self { coefficients, label })
    }

    /// `E[Y(i)] - E[Y(j)]` over `num_arms` arms, labelled `tau_i_j`.
    pub fn pairwise(i: usize, j: usize, num_arms: usize) -> Result<Self> {
        if i == j || !(1..=num_arms).contains(&i) || !(1..=num_arms).contains(&j) {
            return Err(Error::Config(format!(
                "pairwise contrast {i}:{j} is invalid for {num_arms} arms"
            )));
        }
        let mut c = vec![0.0; num_arms];
        c[i - 1] = 1.0;
        c[j - 1] = -1.0;
        Ok(Self {
            coefficients: c,
            label: format!("tau_{i}_{j}"),
        })
    }

    /// Parses `i:j` into a pairwise contrast.
    pub fn parse_pair(spec: &str, num_arms: usize) -> Result<Self> {
        let (a, b) = spec
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("contrast `{spec}` is not of the form a:b")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("contrast `{spec}`: `{s}` is not an arm index")))
        };
        Self::pairwise(parse(a)?, parse(b)?, num_arms)
    }

    /// Every `tau_i_j` with `i < j`.
    pub fn all_pairs(num_arms: usize) -> Vec<Self> {
        let mut out = Vec::new();
        for i in 1..=num_arms {
            for j in i + 1..=num_arms {
                out.push(Self::pairwise(i, j, num_arms).expect("valid pair"));
            }
        }
        out
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn num_arms(&self) -> usize {
        self.coefficients.len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}
