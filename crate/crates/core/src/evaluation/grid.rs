use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cross_validate, FoldPlan};
use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::regressors::ModelFamily;

/// One lattice point: named parameter values in a fixed order.
pub type GridPoint = Vec<(String, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub point: GridPoint,
    /// Pooled CV RMSE, or the failure message.
    pub outcome: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: GridPoint,
    pub best_rmse: f64,
    /// One entry per grid point, in grid order.
    pub trace: Vec<GridEntry>,
}

impl GridResult {
    /// Parameter columns, then `cv_rmse,status`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(first) = self.trace.first() {
            for (name, _) in &first.point {
                out.push_str(name);
                out.push(',');
            }
        }
        out.push_str("cv_rmse,status\n");
        for e in &self.trace {
            for (_, v) in &e.point {
                out.push_str(&format!("{v},"));
            }
            match &e.outcome {
                Ok(r) => out.push_str(&format!("{r},ok\n")),
                Err(msg) => out.push_str(&format!(",\"failed: {}\"\n", msg.replace('"', "'"))),
            }
        }
        out
    }
}

/// Cartesian product of the axes, last axis varying fastest.
pub fn grid_product(axes: &[(&str, Vec<f64>)]) -> Vec<GridPoint> {
    axes.iter().fold(vec![Vec::new()], |acc, (name, values)| {
        acc.iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push((name.to_string(), v));
                    q
                })
            })
            .collect()
    })
}

fn lexicographic(a: &GridPoint, b: &GridPoint) -> Ordering {
    a.iter()
        .zip(b)
        .map(|((_, x), (_, y))| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Cross-validate the family built for every grid point on the same folds
/// and seed. The lowest pooled RMSE wins; ties go to the lexicographically
/// smallest parameter tuple. Points whose build or fit fails are recorded as
/// failed and skipped.
pub fn grid_search<F>(m: &FeatureMatrix, build: F, grid: &[GridPoint], plan: &FoldPlan, seed: u64) -> Result<GridResult>
where
    F: Fn(&GridPoint) -> Result<Box<dyn ModelFamily>> + Sync,
{
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty parameter grid".into()));
    }
    let trace: Vec<GridEntry> = grid
        .par_iter()
        .map(|point| {
            let outcome = build(point)
                .and_then(|family| cross_validate(m, family.as_ref(), plan, seed))
                .map(|cv| cv.pooled_rmse())
                .map_err(|e| e.to_string());
            if let Err(msg) = &outcome {
                log::warn!("grid point {point:?} failed: {msg}");
            }
            GridEntry {
                point: point.clone(),
                outcome,
            }
        })
        .collect();
    let best = trace
        .iter()
        .filter_map(|e| e.outcome.as_ref().ok().filter(|r| r.is_finite()).map(|&r| (r, &e.point)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| lexicographic(a.1, b.1)))
        .ok_or_else(|| Error::Numerical("every grid point failed".into()))?;
    Ok(GridResult {
        best: best.1.clone(),
        best_rmse: best.0,
        trace,
    })
}
