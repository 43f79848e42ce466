//! Error-based combination weights.
//!
//! A learner with training error `ε` gets the raw weight
//!
//! ```text
//! raw(ε) = 1 / (1 + exp(b (ε − c)))
//! ```
//!
//! a logistic that falls from 1 to 0 around `c` with steepness `b`, and the
//! weights are `raw` normalised to sum to one. The increasing form
//! `exp(b (|ε| − c))` is available for comparison.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub b: f64,
    pub c: f64,
    pub literal_eq2: bool,
}

/// Linear-interpolation quantile of sorted data (`q` in `[0, 1]`).
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// `c = median(ε)` and `b = ln 9 / max(IQR(ε), 1e-12)`: across the
/// interquartile range the raw weights differ by a factor of about nine.
pub fn default_weight_params(errors: &[f64]) -> Result<(f64, f64)> {
    if errors.is_empty() {
        return Err(Error::Empty("no learner errors".into()));
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    Ok((9f64.ln() / iqr.max(1e-12), quantile(&sorted, 0.5)))
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Normalised combination weights for learners with training errors
/// `errors`. Computed in log space, so large `b(ε − c)` does not underflow
/// every weight at once.
pub fn compute_weights(errors: &[f64], params: &WeightParams) -> Result<Vec<f64>> {
    let WeightParams { b, c, literal_eq2 } = *params;
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("weight steepness b must be positive, got {b}")));
    }
    if !c.is_finite() {
        return Err(Error::InvalidArgument(format!("weight offset c must be finite, got {c}")));
    }
    if errors.is_empty() {
        return Err(Error::Empty("no learner errors".into()));
    }
    if let Some(e) = errors.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(Error::InvalidArgument(format!("learner errors must be finite and non-negative, got {e}")));
    }
    let log_raw: Vec<f64> = errors
        .iter()
        .map(|&e| {
            if literal_eq2 {
                b * (e.abs() - c)
            } else {
                -softplus(b * (e - c))
            }
        })
        .collect();
    let top = log_raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::Numerical(format!(
            "combination weights underflow for b = {b}, c = {c}"
        )));
    }
    let shifted: Vec<f64> = log_raw.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = shifted.iter().sum();
    Ok(shifted.iter().map(|w| w / total).collect())
}
