use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

/// Per-column mean and sample standard deviation, fitted once and reapplied
/// as `x' = (x − mean) / std`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerState {
    pub columns: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Two-pass mean and sample (n−1) standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

pub fn fit_scaler(m: &FeatureMatrix, columns: &[String]) -> Result<ScalerState> {
    if m.n_samples() < 2 {
        return Err(Error::InvalidArgument(
            "scaling needs at least two samples".into(),
        ));
    }
    let mut means = Vec::with_capacity(columns.len());
    let mut stds = Vec::with_capacity(columns.len());
    for name in columns {
        let j = m.require_column(name)?;
        let (mean, std) = mean_std(&m.column(j));
        if !(std > 0.0) {
            return Err(Error::ConstantColumn(name.clone()));
        }
        means.push(mean);
        stds.push(std);
    }
    Ok(ScalerState {
        columns: columns.to_vec(),
        means,
        stds,
    })
}

/// Fit on every feature column.
pub fn fit_scaler_all(m: &FeatureMatrix) -> Result<ScalerState> {
    fit_scaler(m, m.column_names())
}

impl ScalerState {
    fn indices(&self, m: &FeatureMatrix) -> Result<Vec<usize>> {
        self.columns.iter().map(|c| m.require_column(c)).collect()
    }

    pub fn apply(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        let idx = self.indices(m)?;
        let mut values = m.values().clone();
        for (k, &j) in idx.iter().enumerate() {
            let (mean, std) = (self.means[k], self.stds[k]);
            values.column_mut(j).iter_mut().for_each(|v| *v = (*v - mean) / std);
        }
        m.with_values(values)
    }

    /// `x = x' · std + mean`.
    pub fn inverse(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        let idx = self.indices(m)?;
        let mut values = m.values().clone();
        for (k, &j) in idx.iter().enumerate() {
            let (mean, std) = (self.means[k], self.stds[k]);
            values.column_mut(j).iter_mut().for_each(|v| *v = *v * std + mean);
        }
        m.with_values(values)
    }
}

pub fn apply_scaler(state: &ScalerState, m: &FeatureMatrix) -> Result<FeatureMatrix> {
    state.apply(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_col(v: &[f64]) -> FeatureMatrix {
        let rows: Vec<Vec<f64>> = v.iter().map(|&x| vec![x, 1.0 + x * x]).collect();
        FeatureMatrix::from_rows(vec!["x".into(), "z".into()], &rows, v.to_vec(), "y").unwrap()
    }

    #[test]
    fn symmetric_triple() {
        let m = one_col(&[1.0, 2.0, 3.0]);
        let s = fit_scaler(&m, &["x".to_string()]).unwrap();
        assert_eq!(s.means, vec![2.0]);
        assert_eq!(s.stds, vec![1.0]);
        let out = s.apply(&m).unwrap();
        assert_eq!(out.column(0), vec![-1.0, 0.0, 1.0]);
        // unfitted column and target untouched
        assert_eq!(out.column(1), m.column(1));
        assert_eq!(out.target(), m.target());
    }

    #[test]
    fn constant_column_is_named() {
        let m = one_col(&[5.0, 5.0, 5.0]);
        assert!(matches!(
            fit_scaler(&m, &["x".to_string()]),
            Err(Error::ConstantColumn(c)) if c == "x"
        ));
    }

    #[test]
    fn missing_column_on_apply() {
        let m = one_col(&[1.0, 2.0, 4.0]);
        let s = fit_scaler(&m, &["x".to_string()]).unwrap();
        let other = m.select_columns(&[1]).unwrap();
        assert!(matches!(s.apply(&other), Err(Error::MissingColumn(_))));
    }
}
