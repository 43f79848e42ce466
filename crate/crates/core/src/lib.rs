//! Tabular yield regression: outlier screening, scaling, log transforms,
//! RReliefF feature ranking with sequential forward selection, baseline
//! regressors, and a selected, error-weighted ensemble of shallow networks.

pub mod config;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod feature_select;
pub mod linalg;
pub mod pipeline;
pub mod preprocess;
pub mod regressors;
pub mod rng;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/preprocessing.md")]
    mod preprocessing {}
    #[doc = include_str!("../../../book/src/feature-selection.md")]
    mod feature_selection {}
    #[doc = include_str!("../../../book/src/regressors.md")]
    mod regressors {}
    #[doc = include_str!("../../../book/src/ensemble.md")]
    mod ensemble {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/results.md")]
    mod results {}
}
