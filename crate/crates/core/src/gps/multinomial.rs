use nalgebra::{DMatrix, DVector};

use super::newton::Objective;

/// Baseline-category logit with arm 1 as reference. Parameters are laid out
/// arm-major: `params[(a - 2) * d + k]` is coefficient `k` of arm `a`.
pub(crate) struct MultinomialLogit<'a> {
    pub x: &'a DMatrix<f64>,
    pub arm: &'a [usize],
    pub num_arms: usize,
}

/// Row-wise softmax of `[0, eta]`, written into `probs` (length J).
pub(crate) fn softmax_with_reference(eta: impl Iterator<Item = f64>, probs: &mut [f64]) -> f64 {
    probs[0] = 0.0;
    for (slot, e) in probs[1..].iter_mut().zip(eta) {
        *slot = e;
    }
    let max = probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for p in probs.iter_mut() {
        *p = (*p - max).exp();
        sum += *p;
    }
    for p in probs.iter_mut() {
        *p /= sum;
    }
    max + sum.ln()
}

impl MultinomialLogit<'_> {
    fn linear_predictors(&self, params: &[f64]) -> DMatrix<f64> {
        let d = self.x.ncols();
        let beta = DMatrix::from_column_slice(d, self.num_arms - 1, params);
        self.x * beta
    }
}

impl Objective for MultinomialLogit<'_> {
    fn dim(&self) -> usize {
        (self.num_arms - 1) * self.x.ncols()
    }

    fn value(&self, params: &[f64]) -> f64 {
        let eta = self.linear_predictors(params);
        let mut probs = vec![0.0; self.num_arms];
        let mut ll = 0.0;
        for i in 0..eta.nrows() {
            let lse = softmax_with_reference(eta.row(i).iter().copied(), &mut probs);
            let a = self.arm[i];
            let own = if a == 1 { 0.0 } else { eta[(i, a - 2)] };
            ll += own - lse;
        }
        ll
    }

    fn derivatives(&self, params: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let n = self.x.nrows();
        let d = self.x.ncols();
        let k = self.num_arms - 1;
        let eta = self.linear_predictors(params);
        let mut probs = vec![0.0; self.num_arms];
        // p[i, a-2] for arms 2..J
        let mut p = DMatrix::zeros(n, k);
        let mut resid = DMatrix::zeros(n, k);
        let mut ll = 0.0;
        for i in 0..n {
            let lse = softmax_with_reference(eta.row(i).iter().copied(), &mut probs);
            let a = self.arm[i];
            ll += if a == 1 { 0.0 } else { eta[(i, a - 2)] } - lse;
            for b in 0..k {
                p[(i, b)] = probs[b + 1];
                resid[(i, b)] = if a == b + 2 { 1.0 } else { 0.0 } - probs[b + 1];
            }
        }

        let grad_m = self.x.tr_mul(&resid);
        let grad = DVector::from_column_slice(grad_m.as_slice());

        let mut info = DMatrix::zeros(k * d, k * d);
        for a in 0..k {
            for b in a..k {
                let mut xw = self.x.clone();
                for i in 0..n {
                    let w = if a == b {
                        p[(i, a)] * (1.0 - p[(i, a)])
                    } else {
                        -p[(i, a)] * p[(i, b)]
                    };
                    xw.row_mut(i).scale_mut(w);
                }
                let block = self.x.tr_mul(&xw);
                info.view_mut((a * d, b * d), (d, d)).copy_from(&block);
                if a != b {
                    info.view_mut((b * d, a * d), (d, d)).copy_from(&block.transpose());
                }
            }
        }
        (ll, grad, info)
    }
}
