//! In-scope learners: least squares (plain and ridge), exact Gaussian-process
//! regression and the single-hidden-layer network used as the ensemble's
//! base learner.

mod family;
mod gpr;
mod linear;
mod mlp;

use std::fmt::Debug;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use family::{GprFamily, MeanFamily, MlpFamily, ModelFamily, OlsFamily, RidgeFamily};
pub use gpr::{fit_gpr, fit_gpr_capped, predict_gpr, GprModel, GprParams, DEFAULT_MAX_SAMPLES};
pub use linear::{fit_ols, LinearModel};
pub use mlp::{fit_mlp, MlpConfig, MlpFit, MlpModel, MAX_HIDDEN, MIN_HIDDEN};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

/// A fitted regressor. Prediction is deterministic and thread-safe.
pub trait Predictor: Send + Sync + Debug {
    fn n_features(&self) -> usize;

    /// Predict one sample; `x.len()` must equal [`Predictor::n_features`].
    fn predict_row(&self, x: &[f64]) -> f64;

    fn predict(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.ncols(),
            });
        }
        let mut row = vec![0.0; x.ncols()];
        Ok(DVector::from_iterator(
            x.nrows(),
            (0..x.nrows()).map(|i| {
                for (k, v) in row.iter_mut().enumerate() {
                    *v = x[(i, k)];
                }
                self.predict_row(&row)
            }),
        ))
    }
}

/// Predict every row of a feature matrix.
pub fn predict(model: &dyn Predictor, m: &FeatureMatrix) -> Result<DVector<f64>> {
    model.predict(m.values())
}

const MODEL_FORMAT: &str = "cropyield-model";
const MODEL_VERSION: u32 = 1;

/// A fitted model of any in-scope kind, as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SavedModel {
    Linear(LinearModel),
    Gpr(GprModel),
    Mlp(MlpModel),
}

#[derive(Serialize, Deserialize)]
struct ModelEnvelope {
    format: String,
    version: u32,
    model: SavedModel,
}

impl SavedModel {
    pub fn predictor(&self) -> &dyn Predictor {
        match self {
            SavedModel::Linear(m) => m,
            SavedModel::Gpr(m) => m,
            SavedModel::Mlp(m) => m,
        }
    }

    /// JSON envelope `{"format": "cropyield-model", "version": 1, "model": …}`.
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(&ModelEnvelope {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        })
        .map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: ModelEnvelope =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if env.format != MODEL_FORMAT || env.version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "expected {MODEL_FORMAT} v{MODEL_VERSION}, found {} v{}",
                env.format, env.version
            )));
        }
        Ok(env.model)
    }
}
