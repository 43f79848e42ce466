use serde::{Deserialize, Serialize};

use super::RankedFeatures;
use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result, ResultExt};
use crate::evaluation::{cross_validate, FoldPlan};
use crate::regressors::ModelFamily;
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchStep {
    pub size: usize,
    pub cv_rmse: f64,
}

/// Relative margin a score must beat the best by to count as better; smaller
/// gains are rounding noise.
pub const IMPROVEMENT_TOLERANCE: f64 = 1e-9;

/// Walk prefix lengths `1..=max_len`, scoring each with `score`, until
/// `patience` consecutive lengths fail to beat the best score by more than
/// [`IMPROVEMENT_TOLERANCE`] (relative). Returns the best length and the
/// scores seen.
pub fn forward_prefix_search<F>(max_len: usize, patience: usize, mut score: F) -> Result<(usize, Vec<SearchStep>)>
where
    F: FnMut(usize) -> Result<f64>,
{
    if max_len == 0 {
        return Err(Error::Empty("nothing to select from".into()));
    }
    if patience == 0 {
        return Err(Error::InvalidArgument("patience must be at least 1".into()));
    }
    let mut trace = Vec::new();
    let mut best = (0, f64::INFINITY);
    let mut stale = 0;
    for size in 1..=max_len {
        let rmse = score(size)?;
        if !rmse.is_finite() {
            return Err(Error::Numerical(format!("prefix of size {size} scored {rmse}")));
        }
        trace.push(SearchStep { size, cv_rmse: rmse });
        if best.0 == 0 || rmse < best.1 - IMPROVEMENT_TOLERANCE * best.1.abs() {
            best = (size, rmse);
            stale = 0;
        } else {
            stale += 1;
            if stale >= patience {
                break;
            }
        }
    }
    Ok((best.0, trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Selected feature indices, a prefix of the ranking.
    pub selected: Vec<usize>,
    pub selected_names: Vec<String>,
    pub trace: Vec<SearchStep>,
    pub evaluator_name: String,
}

impl SelectionResult {
    /// `size,cv_rmse,feature` where `feature` is the one added at that size.
    pub fn to_csv(&self, ranked: &RankedFeatures) -> String {
        let mut out = String::from("size,cv_rmse,feature\n");
        for s in &self.trace {
            let name = &ranked.names[ranked.order[s.size - 1]];
            out.push_str(&format!("{},{},{name}\n", s.size, s.cv_rmse));
        }
        out
    }
}

/// Cross-validate growing prefixes of `ranked.order` and keep the best.
/// The prefix of length `s` is scored with seed `derive_seed(seed, s)` on
/// the shared fold plan.
pub fn sequential_forward_select(
    m: &FeatureMatrix,
    ranked: &RankedFeatures,
    evaluator: &dyn ModelFamily,
    folds: &FoldPlan,
    seed: u64,
    patience: usize,
) -> Result<SelectionResult> {
    if folds.k < 2 {
        return Err(Error::InvalidArgument("forward selection needs at least 2 folds".into()));
    }
    if ranked.names.as_slice() != m.column_names() {
        return Err(Error::InvalidArgument(
            "ranking was computed for different columns".into(),
        ));
    }
    let (best, trace) = forward_prefix_search(ranked.order.len(), patience, |size| {
        let sub = m.select_columns(&ranked.order[..size])?;
        let cv = cross_validate(&sub, evaluator, folds, derive_seed(seed, size as u64))
            .with_context(|| format!("evaluating the top {size} features with {}", evaluator.name()))?;
        Ok(cv.pooled_rmse())
    })?;
    let selected = ranked.order[..best].to_vec();
    Ok(SelectionResult {
        selected_names: selected.iter().map(|&j| ranked.names[j].clone()).collect(),
        selected,
        trace,
        evaluator_name: evaluator.name(),
    })
}
