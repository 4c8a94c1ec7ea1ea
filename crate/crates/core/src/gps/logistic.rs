use nalgebra::{DMatrix, DVector};

use super::newton::Objective;

pub fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(eta))` without overflow.
pub(crate) fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

/// Bernoulli log-likelihood with logit link; responses in {0, 1}.
pub(crate) struct BinaryLogit<'a> {
    pub x: &'a DMatrix<f64>,
    pub y: Vec<f64>,
}

impl BinaryLogit<'_> {
    fn linear_predictor(&self, params: &[f64]) -> DVector<f64> {
        self.x * DVector::from_column_slice(params)
    }
}

impl Objective for BinaryLogit<'_> {
    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn value(&self, params: &[f64]) -> f64 {
        self.linear_predictor(params)
            .iter()
            .zip(&self.y)
            .map(|(&eta, &y)| y * eta - softplus(eta))
            .sum()
    }

    // IRLS in step form: X'WX is the information and X'(y - p) the score.
    fn derivatives(&self, params: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let eta = self.linear_predictor(params);
        let mut value = 0.0;
        let mut resid = DVector::zeros(eta.len());
        let mut xw = self.x.clone();
        for (i, (&e, &y)) in eta.iter().zip(&self.y).enumerate() {
            let p = sigmoid(e);
            value += y * e - softplus(e);
            resid[i] = y - p;
            let w = (p * (1.0 - p)).sqrt();
            xw.row_mut(i).scale_mut(w);
        }
        let grad = self.x.tr_mul(&resid);
        let info = xw.tr_mul(&xw);
        (value, grad, info)
    }
}
