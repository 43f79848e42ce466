//! Fitted, reapplicable preprocessing transforms: standardisation, log
//! transform and Cook's-distance outlier removal.

mod log;
mod outliers;
mod scaler;

pub use log::{log_target, log_transform, LogTransform};
pub use outliers::{
    cooks_distance, cooks_distance_with, remove_outliers, OutlierReport, OutlierThreshold,
};
pub use scaler::{apply_scaler, fit_scaler, fit_scaler_all, mean_std, ScalerState};
