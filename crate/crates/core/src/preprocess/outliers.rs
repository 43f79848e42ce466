//! Cook's distance screening of influential samples.
//!
//! For an OLS fit of the target on the features plus an intercept, with
//! residuals `e`, leverages `h` (diagonal of the hat matrix), `p` fitted
//! coefficients and residual mean square `s² = Σe² / (n − p)`:
//!
//! ```text
//! D_i = e_i² / (p s²) · h_ii / (1 − h_ii)²
//! ```
//!
//! The leverages come from a thin QR factorisation: with `X = QR`, the hat
//! matrix is `QQᵀ` and `h_ii` is the squared norm of row `i` of `Q`.

use std::fmt::Write as _;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::linalg::{orthonormal_basis, with_intercept};

/// Leverage values within this distance of 1 are treated as exact.
const LEVERAGE_EPS: f64 = 1e-10;
const ROUNDING_RESIDUAL: f64 = 1e3 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum OutlierThreshold {
    Fixed(f64),
    /// `4 / n`
    FourOverN,
}

impl Default for OutlierThreshold {
    fn default() -> Self {
        OutlierThreshold::Fixed(0.5)
    }
}

impl OutlierThreshold {
    pub fn value(self, n: usize) -> f64 {
        match self {
            OutlierThreshold::Fixed(t) => t,
            OutlierThreshold::FourOverN => 4.0 / n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub distances: Vec<f64>,
    pub leverage: Vec<f64>,
    /// Number of fitted coefficients, intercept included.
    pub n_params: usize,
    pub threshold: f64,
    /// Indices with `D_i > threshold`, ascending.
    pub flagged: Vec<usize>,
}

/// Cook's distances with the default threshold of 0.5.
pub fn cooks_distance(m: &FeatureMatrix) -> Result<OutlierReport> {
    cooks_distance_with(m, OutlierThreshold::default())
}

pub fn cooks_distance_with(m: &FeatureMatrix, threshold: OutlierThreshold) -> Result<OutlierReport> {
    let n = m.n_samples();
    let p = m.n_features() + 1;
    if n <= p {
        return Err(Error::InvalidArgument(format!(
            "Cook's distance needs more samples ({n}) than coefficients ({p})"
        )));
    }
    let x = with_intercept(m.values());
    let q = orthonormal_basis(&x)?;
    let y = m.target();
    let fitted: DVector<f64> = &q * (q.transpose() * y);
    let resid = y - fitted;
    let sse = resid.norm_squared();
    let s2 = sse / (n - p) as f64;

    let mut leverage = Vec::with_capacity(n);
    for i in 0..n {
        let h = q.row(i).norm_squared();
        if h >= 1.0 - LEVERAGE_EPS {
            return Err(Error::Numerical(format!(
                "sample {i} has leverage {h}; its fit is exact and its influence undefined"
            )));
        }
        leverage.push(h);
    }

    // Residuals at rounding level mean an exact fit; their ratio is noise.
    let exact = sse.sqrt() <= ROUNDING_RESIDUAL * (n as f64).sqrt() * y.amax();
    let distances: Vec<f64> = if !exact {
        (0..n)
            .map(|i| {
                let h = leverage[i];
                (resid[i] * resid[i] / (p as f64 * s2)) * (h / ((1.0 - h) * (1.0 - h)))
            })
            .collect()
    } else {
        vec![0.0; n]
    };
    let cut = threshold.value(n);
    let flagged = distances
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > cut)
        .map(|(i, _)| i)
        .collect();
    Ok(OutlierReport {
        distances,
        leverage,
        n_params: p,
        threshold: cut,
        flagged,
    })
}

/// Drop the flagged rows, keeping survivors in order.
pub fn remove_outliers(m: &FeatureMatrix, report: &OutlierReport) -> Result<FeatureMatrix> {
    let n = m.n_samples();
    if let Some(&bad) = report.flagged.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidArgument(format!(
            "flagged index {bad} out of range for {n} samples"
        )));
    }
    if report.flagged.is_empty() {
        return Ok(m.clone());
    }
    let keep: Vec<usize> = (0..n).filter(|i| !report.flagged.contains(i)).collect();
    if keep.is_empty() {
        return Err(Error::Empty("every sample was flagged as an outlier".into()));
    }
    m.select_rows(&keep)
}

impl OutlierReport {
    /// `index,cooks_distance,flagged`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,cooks_distance,flagged\n");
        for (i, d) in self.distances.iter().enumerate() {
            let _ = writeln!(out, "{i},{d},{}", self.flagged.binary_search(&i).is_ok());
        }
        out
    }
}
