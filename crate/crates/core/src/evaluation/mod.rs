//! Metrics, fold plans, cross-validation, grid search, the stage report and
//! the hold-out comparison.

mod cv;
mod folds;
mod grid;
mod holdout;
mod metrics;
mod stages;

pub use cv::{cross_validate, CvResult};
pub use folds::{holdout_indices, holdout_split, make_folds, FoldPlan};
pub use grid::{grid_product, grid_search, GridEntry, GridPoint, GridResult};
pub use holdout::{evaluate_holdout, HoldoutOptions, HoldoutOutcome, HoldoutReport, ModelScore};
pub use metrics::{metrics, rmse, MetricsReport};
pub use stages::{stage_report, StageCell, StageReport};
