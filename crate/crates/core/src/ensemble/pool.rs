use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::weights::{compute_weights, default_weight_params, WeightParams};
use crate::config::{EnsembleConfig, ErrorSource, SelectionScoring};
use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result, ResultExt};
use crate::feature_select::{forward_prefix_search, rank_order, rrelieff_weights, ReliefParams, SearchStep};
use crate::regressors::{fit_mlp, MlpConfig, MlpModel, Predictor};
use crate::rng::{derive_seed, rng_from_seed};

/// One trained pool member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseLearner {
    pub model: MlpModel,
    pub hidden_size: usize,
    /// Training rows it was fitted on, in draw order (repeats when
    /// bootstrapping).
    pub subsample: Vec<usize>,
    /// ε: mean squared error used for weighting.
    pub train_error: f64,
    pub seed: u64,
}

impl BaseLearner {
    /// Membership mask of the subsample over `n` rows.
    pub fn in_bag(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &i in &self.subsample {
            mask[i] = true;
        }
        mask
    }
}

/// Train `pool_size` networks. Learner `i` uses seed `derive_seed(seed, i)`
/// for its hidden size (uniform in `[hidden_min, hidden_max]`), its
/// subsample of `⌈fraction · n⌉` rows and its training.
pub fn train_pool(m: &FeatureMatrix, cfg: &EnsembleConfig, mlp: &MlpConfig, seed: u64) -> Result<Vec<BaseLearner>> {
    let n = m.n_samples();
    if cfg.pool_size == 0 {
        return Err(Error::InvalidArgument("pool size must be at least 1".into()));
    }
    if !(cfg.subsample_fraction > 0.0 && cfg.subsample_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "subsample fraction must lie in (0, 1], got {}",
            cfg.subsample_fraction
        )));
    }
    if n == 0 {
        return Err(Error::Empty("no training rows".into()));
    }
    let size = ((cfg.subsample_fraction * n as f64).ceil() as usize).clamp(1, n);
    (0..cfg.pool_size)
        .into_par_iter()
        .map(|i| {
            let learner_seed = derive_seed(seed, i as u64);
            let mut rng = rng_from_seed(learner_seed);
            let hidden_size = rng.random_range(cfg.hidden_min..=cfg.hidden_max);
            let subsample: Vec<usize> = if cfg.bootstrap {
                (0..size).map(|_| rng.random_range(0..n)).collect()
            } else {
                sample(&mut rng, n, size).into_vec()
            };
            let rows = m.select_rows(&subsample)?;
            let config = MlpConfig {
                hidden_size,
                ..mlp.clone()
            };
            let fit = fit_mlp(&rows, &config, derive_seed(learner_seed, 1))?;
            let train_error = match cfg.error_source {
                ErrorSource::Subsample => fit.train_mse,
                ErrorSource::OutOfSample => {
                    let bag = BaseLearner {
                        model: fit.model.clone(),
                        hidden_size,
                        subsample: subsample.clone(),
                        train_error: 0.0,
                        seed: learner_seed,
                    }
                    .in_bag(n);
                    let unused: Vec<usize> = (0..n).filter(|&r| !bag[r]).collect();
                    if unused.is_empty() {
                        return Err(Error::InvalidArgument(
                            "out-of-sample learner errors need rows outside each subsample".into(),
                        ));
                    }
                    let test = m.select_rows(&unused)?;
                    let pred = fit.model.predict(test.values())?;
                    (pred - test.target()).norm_squared() / unused.len() as f64
                }
            };
            Ok(BaseLearner {
                model: fit.model,
                hidden_size,
                subsample,
                train_error,
                seed: learner_seed,
            })
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.with_context(|| format!("training base learner {i}")))
        .collect()
}

/// Predictions of every learner on every row: an `n × pool` matrix.
pub fn learner_predictions(pool: &[BaseLearner], m: &FeatureMatrix) -> Result<DMatrix<f64>> {
    let cols: Vec<Vec<f64>> = pool
        .par_iter()
        .map(|l| Ok(l.model.predict(m.values())?.iter().copied().collect()))
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(m.n_samples(), pool.len(), |i, j| cols[j][i]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedLearners {
    /// RReliefF weight per learner; `-inf` for constant-output learners.
    pub weights: Vec<f64>,
    /// Learner indices, best first.
    pub order: Vec<usize>,
}

/// Rank learners by RReliefF on the matrix of their predictions against the
/// true target. Learners whose predictions are constant cannot be ranked;
/// they get weight `-inf` and go last.
pub fn rank_learners(predictions: &DMatrix<f64>, m: &FeatureMatrix, relief: &ReliefParams, seed: u64) -> Result<RankedLearners> {
    let pool = predictions.ncols();
    if pool == 0 {
        return Err(Error::Empty("empty learner pool".into()));
    }
    if predictions.nrows() != m.n_samples() {
        return Err(Error::DimensionMismatch {
            expected: m.n_samples(),
            actual: predictions.nrows(),
        });
    }
    let varying: Vec<usize> = (0..pool)
        .filter(|&j| {
            let c = predictions.column(j);
            c.max() > c.min()
        })
        .collect();
    let mut weights = vec![f64::NEG_INFINITY; pool];
    if varying.len() < pool {
        log::warn!("{} learners predict a constant and are ranked last", pool - varying.len());
    }
    if !varying.is_empty() {
        let sub = predictions.select_columns(&varying);
        let names: Vec<String> = varying.iter().map(|j| format!("learner_{j}")).collect();
        let y: Vec<f64> = m.target().iter().copied().collect();
        let w = rrelieff_weights(&sub, &y, &names, m.target_name(), relief, seed)?;
        for (&j, wj) in varying.iter().zip(w) {
            weights[j] = wj;
        }
    }
    Ok(RankedLearners {
        order: rank_order(&weights),
        weights,
    })
}

/// Weight parameters for a set of learner errors: configured values where
/// given, data-driven defaults otherwise.
pub fn weight_params_for(errors: &[f64], cfg: &EnsembleConfig) -> Result<WeightParams> {
    let (b, c) = default_weight_params(errors)?;
    Ok(WeightParams {
        b: cfg.b.unwrap_or(b),
        c: cfg.c.unwrap_or(c),
        literal_eq2: cfg.literal_eq2,
    })
}

/// Weighted-average score of the learners `members`.
///
/// With out-of-bag scoring each row is predicted only by members that did
/// not train on it, their weights renormalised; rows with no such member
/// are skipped.
fn prefix_rmse(
    members: &[usize],
    pool: &[BaseLearner],
    predictions: &DMatrix<f64>,
    bags: &[Vec<bool>],
    y: &[f64],
    cfg: &EnsembleConfig,
    scoring: SelectionScoring,
) -> Result<f64> {
    let errors: Vec<f64> = members.iter().map(|&j| pool[j].train_error).collect();
    let w = compute_weights(&errors, &weight_params_for(&errors, cfg)?)?;
    let mut sse = 0.0;
    let mut scored = 0usize;
    for (i, &yi) in y.iter().enumerate() {
        let (mut num, mut den) = (0.0, 0.0);
        for (&j, &wj) in members.iter().zip(&w) {
            if scoring == SelectionScoring::OutOfBag && bags[j][i] {
                continue;
            }
            num += wj * predictions[(i, j)];
            den += wj;
        }
        if den > 0.0 {
            sse += (num / den - yi).powi(2);
            scored += 1;
        }
    }
    if scored == 0 {
        return Err(Error::Numerical(format!(
            "no row could be scored for a prefix of {} learners",
            members.len()
        )));
    }
    Ok((sse / scored as f64).sqrt())
}

/// Add learners in ranked order while the combined score improves; stop
/// after `cfg.patience` additions without a strict improvement. Returns the
/// selected learners (a prefix of `order`) and the trace.
pub fn select_learners(
    pool: &[BaseLearner],
    order: &[usize],
    predictions: &DMatrix<f64>,
    m: &FeatureMatrix,
    cfg: &EnsembleConfig,
) -> Result<(Vec<usize>, Vec<SearchStep>)> {
    let n = m.n_samples();
    let bags: Vec<Vec<bool>> = pool.iter().map(|l| l.in_bag(n)).collect();
    let mut scoring = cfg.scoring;
    if scoring == SelectionScoring::OutOfBag && bags.iter().any(|b| b.iter().all(|&x| x)) {
        log::warn!("some learners saw every row; scoring learner selection in-sample");
        scoring = SelectionScoring::InSample;
    }
    let y: Vec<f64> = m.target().iter().copied().collect();
    let (best, trace) = forward_prefix_search(order.len(), cfg.patience, |size| {
        prefix_rmse(&order[..size], pool, predictions, &bags, &y, cfg, scoring)
            .with_context(|| format!("scoring the top {size} learners"))
    })?;
    Ok((order[..best].to_vec(), trace))
}
