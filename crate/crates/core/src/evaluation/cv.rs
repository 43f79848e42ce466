use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{metrics, FoldPlan, MetricsReport};
use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result, ResultExt};
use crate::regressors::ModelFamily;
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub fold_metrics: Vec<MetricsReport>,
    /// Out-of-fold prediction for every sample, in sample order.
    pub predictions: Vec<f64>,
    /// Metrics over all out-of-fold predictions together.
    pub pooled: MetricsReport,
}

impl CvResult {
    pub fn pooled_rmse(&self) -> f64 {
        self.pooled.rmse
    }

    pub fn mean_fold_rmse(&self) -> f64 {
        self.fold_metrics.iter().map(|m| m.rmse).sum::<f64>() / self.fold_metrics.len() as f64
    }
}

/// k-fold cross-validation. Fold `f` is fitted with seed
/// `derive_seed(seed, f)` on the rows outside it and scored on the rows in
/// it. Folds run in parallel; the result does not depend on scheduling.
pub fn cross_validate(m: &FeatureMatrix, family: &dyn ModelFamily, plan: &FoldPlan, seed: u64) -> Result<CvResult> {
    let n = m.n_samples();
    if plan.n_samples() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: plan.n_samples(),
        });
    }
    let folds: Vec<(Vec<usize>, Vec<f64>)> = (0..plan.k)
        .into_par_iter()
        .map(|f| {
            let train_rows = plan.train_indices(f);
            let test_rows = plan.test_indices(f);
            if train_rows.len() < family.min_train_rows() {
                return Err(Error::InvalidArgument(format!(
                    "fold {f} leaves {} training rows; {} needs at least {}",
                    train_rows.len(),
                    family.name(),
                    family.min_train_rows()
                )));
            }
            let train = m.select_rows(&train_rows)?;
            let test = m.select_rows(&test_rows)?;
            let model = family.fit(&train, derive_seed(seed, f as u64))?;
            let pred = model.predict(test.values())?;
            Ok((test_rows, pred.iter().copied().collect()))
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .enumerate()
        .map(|(f, r)| r.with_context(|| format!("cross-validation fold {f} of {}", family.name())))
        .collect::<Result<_>>()?;

    let y: Vec<f64> = m.target().iter().copied().collect();
    let mut predictions = vec![f64::NAN; n];
    let mut fold_metrics = Vec::with_capacity(plan.k);
    for (rows, pred) in &folds {
        let truth: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
        fold_metrics.push(metrics(&truth, pred)?);
        for (&i, &p) in rows.iter().zip(pred) {
            predictions[i] = p;
        }
    }
    let pooled = metrics(&y, &predictions)?;
    Ok(CvResult {
        fold_metrics,
        predictions,
        pooled,
    })
}
