use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::Predictor;
use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::linalg::lstsq;

/// `ŷ = intercept + Σ coefficients_j x_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// 0 for ordinary least squares.
    pub ridge_lambda: f64,
}

/// Least squares with an optional ridge penalty `λ‖β‖²` on the slopes only.
///
/// Features and target are centred first, so the intercept is never
/// penalised; the penalised problem is solved as the stacked system
/// `[X_c; √λ I] β ≈ [y_c; 0]` through a Householder QR.
pub fn fit_ols(m: &FeatureMatrix, ridge_lambda: f64) -> Result<LinearModel> {
    if !(ridge_lambda >= 0.0) || !ridge_lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "ridge lambda must be finite and non-negative, got {ridge_lambda}"
        )));
    }
    let n = m.n_samples();
    let f = m.n_features();
    if ridge_lambda == 0.0 && n <= f {
        return Err(Error::RankDeficient(format!(
            "{n} samples cannot determine {f} slopes and an intercept"
        )));
    }
    let x = m.values();
    let y = m.target();
    let x_mean: Vec<f64> = (0..f).map(|j| x.column(j).mean()).collect();
    let y_mean = y.mean();
    if f == 0 {
        return Ok(LinearModel {
            coefficients: vec![],
            intercept: y_mean,
            ridge_lambda,
        });
    }

    let rows = if ridge_lambda > 0.0 { n + f } else { n };
    let mut a = DMatrix::zeros(rows, f);
    let mut b = DVector::zeros(rows);
    for i in 0..n {
        for j in 0..f {
            a[(i, j)] = x[(i, j)] - x_mean[j];
        }
        b[i] = y[i] - y_mean;
    }
    if ridge_lambda > 0.0 {
        let s = ridge_lambda.sqrt();
        for j in 0..f {
            a[(n + j, j)] = s;
        }
    }
    let beta = lstsq(&a, &b)?;
    let intercept = y_mean - beta.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    Ok(LinearModel {
        coefficients: beta.iter().copied().collect(),
        intercept,
        ridge_lambda,
    })
}

impl Predictor for LinearModel {
    fn n_features(&self) -> usize {
        self.coefficients.len()
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(x)
                .map(|(b, v)| b * v)
                .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> FeatureMatrix {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let y = (0..6).map(|i| 2.0 * i as f64 + 1.0).collect();
        FeatureMatrix::from_rows(vec!["x".into()], &rows, y, "y").unwrap()
    }

    #[test]
    fn exact_line() {
        let lm = fit_ols(&line(), 0.0).unwrap();
        assert!((lm.coefficients[0] - 2.0).abs() < 1e-10);
        assert!((lm.intercept - 1.0).abs() < 1e-10);
        let pred = lm.predict(line().values()).unwrap();
        assert!((pred - line().target()).amax() < 1e-10);
    }

    #[test]
    fn heavy_ridge_shrinks_to_mean() {
        let lm = fit_ols(&line(), 1e12).unwrap();
        assert!(lm.coefficients[0].abs() < 1e-8);
        assert!((lm.intercept - line().target().mean()).abs() < 1e-6);
    }

    #[test]
    fn rank_deficiency_without_ridge() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let y = (0..6).map(|i| (i * i) as f64).collect();
        let m = FeatureMatrix::from_rows(vec!["a".into(), "b".into()], &rows, y, "y").unwrap();
        assert!(matches!(fit_ols(&m, 0.0), Err(Error::RankDeficient(_))));
        assert!(fit_ols(&m, 0.1).is_ok());
        assert!(fit_ols(&m, -1.0).is_err());
    }

    #[test]
    fn dimension_mismatch_on_predict() {
        let lm = fit_ols(&line(), 0.0).unwrap();
        let x = DMatrix::zeros(2, 3);
        assert!(matches!(lm.predict(&x), Err(Error::DimensionMismatch { .. })));
    }
}
