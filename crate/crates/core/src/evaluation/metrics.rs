use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regression error summary. `r2` is `None` when the true values are
/// constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub r2: Option<f64>,
}

impl MetricsReport {
    /// R², or an error when it is undefined.
    pub fn r2(&self) -> Result<f64> {
        self.r2
            .ok_or_else(|| Error::InvalidArgument("R² is undefined for a constant target".into()))
    }

    /// `key = value` lines.
    pub fn to_kv(&self) -> String {
        let r2 = self.r2.map_or("nan".to_string(), |v| v.to_string());
        format!(
            "n = {}\nmae = {}\nmse = {}\nrmse = {}\nr2 = {r2}\n",
            self.n, self.mae, self.mse, self.rmse
        )
    }

    pub fn csv_header() -> &'static str {
        "n,mae,mse,rmse,r2"
    }

    pub fn csv_row(&self) -> String {
        let r2 = self.r2.map_or(String::new(), |v| v.to_string());
        format!("{},{},{},{},{r2}", self.n, self.mae, self.mse, self.rmse)
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::csv_header(), self.csv_row())
    }
}

/// MAE, MSE, RMSE and R² of `y_pred` against `y_true`.
pub fn metrics(y_true: &[f64], y_pred: &[f64]) -> Result<MetricsReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    let n = y_true.len();
    if n == 0 {
        return Err(Error::Empty("no predictions to score".into()));
    }
    let nf = n as f64;
    let mut abs = 0.0;
    let mut sse = 0.0;
    for (t, p) in y_true.iter().zip(y_pred) {
        let e = t - p;
        abs += e.abs();
        sse += e * e;
    }
    let mean = y_true.iter().sum::<f64>() / nf;
    let sst: f64 = y_true.iter().map(|t| (t - mean).powi(2)).sum();
    let mse = sse / nf;
    Ok(MetricsReport {
        n,
        mae: abs / nf,
        mse,
        rmse: mse.sqrt(),
        r2: (sst > 0.0).then(|| 1.0 - sse / sst),
    })
}

/// Root mean squared error alone.
pub fn rmse(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    Ok(metrics(y_true, y_pred)?.rmse)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_mean_predictions() {
        let y = [1.0, 2.0, 4.0, 7.0];
        let m = metrics(&y, &y).unwrap();
        assert_eq!((m.mae, m.mse, m.rmse, m.r2), (0.0, 0.0, 0.0, Some(1.0)));
        let mean = [3.5; 4];
        assert!(metrics(&y, &mean).unwrap().r2.unwrap().abs() < 1e-15);
    }

    #[test]
    fn constant_truth_has_no_r2() {
        let m = metrics(&[2.0, 2.0], &[1.0, 3.0]).unwrap();
        assert_eq!(m.mse, 1.0);
        assert!(m.r2().is_err());
        assert!(m.to_kv().contains("r2 = nan"));
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(metrics(&[1.0], &[1.0, 2.0]).is_err());
        assert!(metrics(&[], &[]).is_err());
    }
}
