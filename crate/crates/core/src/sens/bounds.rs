use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gps::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    /// Risk ratio between observed and true propensity, with the implicit
    /// floor that keeps the true propensity at most 1.
    #[default]
    RiskRatio,
    /// Odds ratio between observed and true propensity.
    OddsRatio,
}

impl ModelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::RiskRatio => "risk-ratio",
            ModelFamily::OddsRatio => "odds-ratio",
        }
    }
}

/// Magnitude of unmeasured confounding. `gamma0` is on the log scale, so the
/// ratio bound is `exp(gamma0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySpec {
    pub gamma0: f64,
    pub family: ModelFamily,
}

impl SensitivitySpec {
    pub fn new(gamma0: f64, family: ModelFamily) -> Result<Self> {
        if !(gamma0 >= 0.0) || !gamma0.is_finite() {
            return Err(Error::Domain(format!("gamma0 must be finite and >= 0, got {gamma0}")));
        }
        Ok(Self { gamma0, family })
    }

    pub fn risk_ratio(gamma0: f64) -> Result<Self> {
        Self::new(gamma0, ModelFamily::RiskRatio)
    }

    pub fn odds_ratio(gamma0: f64) -> Result<Self> {
        Self::new(gamma0, ModelFamily::OddsRatio)
    }

    /// From the ratio scale `Gamma0 = exp(gamma0) >= 1`.
    pub fn from_ratio(gamma0_exp: f64, family: ModelFamily) -> Result<Self> {
        if !(gamma0_exp >= 1.0) {
            return Err(Error::Domain(format!("Gamma0 must be >= 1, got {gamma0_exp}")));
        }
        Self::new(gamma0_exp.ln(), family)
    }

    pub fn ratio(&self) -> f64 {
        self.gamma0.exp()
    }
}

/// Admissible range of `z = exp(l)` for each unit's received arm; the true
/// propensity implied by `z` is `e / z`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitBounds {
    pub z_lo: Vec<f64>,
    pub z_hi: Vec<f64>,
}

/// Per-unit bounds for `z` given each unit's observed propensity for the arm
/// it received.
pub fn compute_z_bounds(gps_received: &[f64], spec: &SensitivitySpec) -> Result<UnitBounds> {
    if let Some((i, e)) = gps_received.iter().enumerate().find(|(_, &e)| !(e > 0.0 && e < 1.0)) {
        return Err(Error::Domain(format!(
            "observed propensity {e} at row {} is outside (0, 1)",
            i + 1
        )));
    }
    let (z_lo, z_hi) = gps_received.iter().map(|&e| unit_bounds(e, spec)).unzip();
    Ok(UnitBounds { z_lo, z_hi })
}

/// Bounds of `z` for one unit with observed propensity `e` in (0, 1).
pub(crate) fn unit_bounds(e: f64, spec: &SensitivitySpec) -> (f64, f64) {
    match spec.family {
        ModelFamily::RiskRatio => {
            let big = spec.gamma0.exp();
            (e.max(1.0 / big), big)
        }
        ModelFamily::OddsRatio => {
            let logit = (e / (1.0 - e)).ln();
            let e_hi = sigmoid(logit + spec.gamma0);
            let e_lo = sigmoid(logit - spec.gamma0);
            if spec.gamma0 == 0.0 {
                (1.0, 1.0)
            } else {
                (e / e_hi, e / e_lo)
            }
        }
    }
}

/// True propensity implied by the observed propensity and a shift `z`.
pub fn shifted_propensity(e_beta: f64, z: f64) -> f64 {
    e_beta / z
}
