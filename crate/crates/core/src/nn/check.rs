//! Finite-difference gradient checking.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// A scalar loss that can report its analytic gradient, evaluated at an
/// arbitrary flat parameter vector.
pub trait DiffLoss {
    fn n_params(&self) -> usize;
    fn loss(&mut self, params: &[f64]) -> Result<f64>;
    /// Evaluate the loss and write `d(loss)/d(params)` into `grad_out`.
    fn loss_and_grad(&mut self, params: &[f64], grad_out: &mut [f64]) -> Result<f64>;
}

/// Compare the analytic gradient against central finite differences at `at`,
/// coordinate by coordinate, and return the maximum relative error
/// `|a - n| / max(1, |a|, |n|)`.
pub fn grad_check(f: &mut dyn DiffLoss, at: &[f64], eps: f64) -> Result<f64> {
    if !(1e-6..=1e-3).contains(&eps) {
        return Err(Error::Check(alloc::format!(
            "eps {eps} outside [1e-6, 1e-3]"
        )));
    }
    if at.len() != f.n_params() {
        return Err(Error::Check(alloc::format!(
            "{} values for {} parameters",
            at.len(),
            f.n_params()
        )));
    }
    let mut analytic = vec![0.0; at.len()];
    let base = f.loss_and_grad(at, &mut analytic)?;
    if !base.is_finite() || analytic.iter().any(|g| !g.is_finite()) {
        return Err(Error::Check("non-finite loss or analytic gradient".into()));
    }
    let mut point: Vec<f64> = at.to_vec();
    let mut worst = 0.0f64;
    for i in 0..at.len() {
        point[i] = at[i] + eps;
        let plus = f.loss(&point)?;
        point[i] = at[i] - eps;
        let minus = f.loss(&point)?;
        point[i] = at[i];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Check(alloc::format!(
                "non-finite loss while perturbing coordinate {i}"
            )));
        }
        let numeric = (plus - minus) / (2.0 * eps);
        let denom = math::fmax(1.0, math::fmax(math::abs(analytic[i]), math::abs(numeric)));
        worst = math::fmax(worst, math::abs(analytic[i] - numeric) / denom);
    }
    Ok(worst)
}
