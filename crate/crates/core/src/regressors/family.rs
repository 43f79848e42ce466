//! Model families: factories that fit a fresh predictor on a training split.
//! Cross-validation, feature selection and grid search only see this trait.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use super::{fit_gpr_capped, fit_mlp, fit_ols, GprModel, GprParams, LinearModel, MlpConfig, Predictor};
use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::linalg::independent_columns;
use crate::preprocess::mean_std;

pub trait ModelFamily: Send + Sync + Debug {
    fn name(&self) -> String;

    /// Fewest training rows the family can fit on.
    fn min_train_rows(&self) -> usize {
        2
    }

    fn fit(&self, train: &FeatureMatrix, seed: u64) -> Result<Box<dyn Predictor>>;
}

/// Expand coefficients fitted on a column subset back to the full width,
/// with zeros for dropped columns.
fn expand(model: LinearModel, kept: &[usize], width: usize) -> LinearModel {
    let mut coefficients = vec![0.0; width];
    for (c, &j) in model.coefficients.iter().zip(kept) {
        coefficients[j] = *c;
    }
    LinearModel {
        coefficients,
        ..model
    }
}

/// Multiple linear regression. Columns that are exact linear combinations of
/// earlier ones (or constant) are aliased out, so their coefficient is zero.
#[derive(Debug, Clone, Default)]
pub struct OlsFamily;

impl ModelFamily for OlsFamily {
    fn name(&self) -> String {
        "MLR".into()
    }

    fn fit(&self, train: &FeatureMatrix, _seed: u64) -> Result<Box<dyn Predictor>> {
        let kept = independent_columns(train.values(), true);
        let sub = train.select_columns(&kept)?;
        let model = fit_ols(&sub, 0.0)?;
        Ok(Box::new(expand(model, &kept, train.n_features())))
    }

    fn min_train_rows(&self) -> usize {
        3
    }
}

/// Ridge regression, optionally on internally standardised features. Aliased
/// columns are dropped before fitting, so exact copies of a feature never
/// change the fit.
#[derive(Debug, Clone)]
pub struct RidgeFamily {
    pub lambda: f64,
    pub standardize: bool,
}

impl Default for RidgeFamily {
    fn default() -> Self {
        Self {
            lambda: 1e-2,
            standardize: true,
        }
    }
}

impl ModelFamily for RidgeFamily {
    fn name(&self) -> String {
        format!("ridge(lambda={})", self.lambda)
    }

    fn fit(&self, train: &FeatureMatrix, _seed: u64) -> Result<Box<dyn Predictor>> {
        let kept = independent_columns(train.values(), true);
        let sub = train.select_columns(&kept)?;
        if !self.standardize || kept.is_empty() {
            let model = fit_ols(&sub, self.lambda)?;
            return Ok(Box::new(expand(model, &kept, train.n_features())));
        }
        let stats: Vec<(f64, f64)> = (0..sub.n_features()).map(|j| mean_std(&sub.column(j))).collect();
        let mut values = sub.values().clone();
        for (j, &(mu, sd)) in stats.iter().enumerate() {
            values.column_mut(j).iter_mut().for_each(|v| *v = (*v - mu) / sd);
        }
        let scaled = sub.with_values(values)?;
        let fitted = fit_ols(&scaled, self.lambda)?;
        // fold the standardisation back into raw-unit coefficients
        let mut intercept = fitted.intercept;
        let coefficients: Vec<f64> = fitted
            .coefficients
            .iter()
            .zip(&stats)
            .map(|(b, &(mu, sd))| {
                intercept -= b * mu / sd;
                b / sd
            })
            .collect();
        let model = LinearModel {
            coefficients,
            intercept,
            ridge_lambda: self.lambda,
        };
        Ok(Box::new(expand(model, &kept, train.n_features())))
    }
}

/// GPR with the prior mean at zero on a standardised target.
#[derive(Debug, Clone)]
pub struct GprFamily {
    pub params: GprParams,
    pub standardize_target: bool,
    pub max_samples: usize,
}

#[derive(Debug)]
struct ScaledTarget<P> {
    inner: P,
    offset: f64,
    scale: f64,
}

impl<P: Predictor> Predictor for ScaledTarget<P> {
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        self.inner.predict_row(x) * self.scale + self.offset
    }
}

impl ModelFamily for GprFamily {
    fn name(&self) -> String {
        "GPR".into()
    }

    fn fit(&self, train: &FeatureMatrix, _seed: u64) -> Result<Box<dyn Predictor>> {
        let y: Vec<f64> = train.target().iter().copied().collect();
        let (offset, scale) = if self.standardize_target {
            let (mu, sd) = mean_std(&y);
            (mu, if sd > 0.0 { sd } else { 1.0 })
        } else {
            (0.0, 1.0)
        };
        let scaled = train.with_target(train.target().map(|v| (v - offset) / scale))?;
        let inner: GprModel = fit_gpr_capped(&scaled, self.params, self.max_samples)?;
        Ok(Box::new(ScaledTarget {
            inner,
            offset,
            scale,
        }))
    }
}

#[derive(Debug, Clone, Default)]
pub struct MlpFamily {
    pub config: MlpConfig,
}

impl ModelFamily for MlpFamily {
    fn name(&self) -> String {
        format!("ANN(hidden={})", self.config.hidden_size)
    }

    fn fit(&self, train: &FeatureMatrix, seed: u64) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(fit_mlp(train, &self.config, seed)?.model))
    }
}

/// Predicts the training mean whatever the features; a floor for comparisons.
#[derive(Debug, Clone, Default)]
pub struct MeanFamily;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MeanModel {
    n_features: usize,
    mean: f64,
}

impl Predictor for MeanModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_row(&self, _x: &[f64]) -> f64 {
        self.mean
    }
}

impl ModelFamily for MeanFamily {
    fn name(&self) -> String {
        "mean".into()
    }

    fn min_train_rows(&self) -> usize {
        1
    }

    fn fit(&self, train: &FeatureMatrix, _seed: u64) -> Result<Box<dyn Predictor>> {
        if train.n_samples() == 0 {
            return Err(Error::Empty("no training rows".into()));
        }
        Ok(Box::new(MeanModel {
            n_features: train.n_features(),
            mean: train.target().mean(),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mlr_tolerates_aliased_columns() {
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                let a = i as f64;
                let b = ((i * 3) % 5) as f64;
                vec![a, b, (a + b) / 2.0]
            })
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| 1.0 + r[0] - 2.0 * r[1]).collect();
        let m = FeatureMatrix::from_rows(vec!["a".into(), "b".into(), "c".into()], &rows, y, "y")
            .unwrap();
        let p = OlsFamily.fit(&m, 0).unwrap();
        let pred = p.predict(m.values()).unwrap();
        assert!((pred - m.target()).amax() < 1e-9);
    }

    #[test]
    fn ridge_ignores_exact_duplicate() {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![(i as f64).sin(), (i as f64).sin()]).collect();
        let y: Vec<f64> = rows.iter().enumerate().map(|(i, r)| r[0] + 0.1 * (i % 3) as f64).collect();
        let two = FeatureMatrix::from_rows(vec!["a".into(), "b".into()], &rows, y, "y").unwrap();
        let one = two.select_columns(&[0]).unwrap();
        let fam = RidgeFamily::default();
        let p2 = fam.fit(&two, 0).unwrap().predict(two.values()).unwrap();
        let p1 = fam.fit(&one, 0).unwrap().predict(one.values()).unwrap();
        assert_eq!(p1, p2);
    }
}
