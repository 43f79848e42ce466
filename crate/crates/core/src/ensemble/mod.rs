//! A pool of shallow networks trained on random subsamples, ranked by
//! RReliefF on their predictions, selected by forward addition and combined
//! by an error-weighted average.

mod pool;
mod weights;

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use pool::{learner_predictions, rank_learners, select_learners, train_pool, weight_params_for, BaseLearner, RankedLearners};
pub use weights::{compute_weights, default_weight_params, WeightParams};

use crate::config::{PipelineConfig, Stage};
use crate::dataset::{FeatureMatrix, SampleRecord};
use crate::error::{Error, Result, ResultExt};
use crate::feature_select::SearchStep;
use crate::pipeline::{fit_pipeline, model_stages, screen_dataset, Featurizer, FittedPipeline, PipelineFit, Screening};
use crate::regressors::Predictor;
use crate::rng::{derive_path, derive_seed, streams};

const ENSEMBLE_FORMAT: &str = "cropyield-ensemble";
const ENSEMBLE_VERSION: u32 = 1;

/// The selected learners, their weights and the preprocessing needed to
/// score raw records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub featurizer: Featurizer,
    pub pipeline: FittedPipeline,
    pub learners: Vec<BaseLearner>,
    /// ω, aligned with `learners`; sums to one.
    pub weights: Vec<f64>,
    pub weight_params: WeightParams,
}

#[derive(Serialize, Deserialize)]
struct EnsembleEnvelope<T> {
    format: String,
    version: u32,
    ensemble: T,
}

impl EnsembleModel {
    /// Model-unit output of every selected learner on preprocessed rows.
    pub fn learner_outputs(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(x.nrows(), self.learners.len());
        for (j, l) in self.learners.iter().enumerate() {
            out.set_column(j, &l.model.predict(x)?);
        }
        Ok(out)
    }

    /// Weighted average of learner outputs, in model units.
    ///
    /// Written as an offset from the first output and clamped to the row's
    /// range, so rounding never leaves the learners' envelope and identical
    /// outputs come back unchanged.
    pub fn combine(&self, outputs: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(
            outputs.nrows(),
            (0..outputs.nrows()).map(|i| {
                let row = outputs.row(i);
                let first = row[0];
                let offset: f64 = row.iter().zip(&self.weights).map(|(y, w)| w * (y - first)).sum();
                (first + offset).clamp(row.min(), row.max())
            }),
        )
    }

    /// Predictions in yield units for a featurized matrix (the output of
    /// [`Featurizer::matrix`]).
    pub fn predict_matrix(&self, m: &FeatureMatrix) -> Result<DVector<f64>> {
        let x = self.pipeline.transform_features(m)?;
        let combined = self.combine(&self.learner_outputs(x.values())?);
        Ok(combined.map(|v| self.pipeline.invert_target(v)))
    }

    /// Predictions in yield units for raw records.
    pub fn predict_records(&self, records: &[SampleRecord]) -> Result<DVector<f64>> {
        if records.is_empty() {
            return Err(Error::Empty("no records to predict".into()));
        }
        self.predict_matrix(&self.featurizer.matrix(records)?)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&EnsembleEnvelope {
            format: ENSEMBLE_FORMAT.into(),
            version: ENSEMBLE_VERSION,
            ensemble: self,
        })
        .map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: EnsembleEnvelope<Self> =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("not an ensemble file: {e}")))?;
        if env.format != ENSEMBLE_FORMAT || env.version != ENSEMBLE_VERSION {
            return Err(Error::Format(format!(
                "unsupported ensemble format {} version {}",
                env.format, env.version
            )));
        }
        Ok(env.ensemble)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

impl Predictor for EnsembleModel {
    fn n_features(&self) -> usize {
        self.pipeline.input_columns.len()
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        self.predict(&DMatrix::from_row_slice(1, x.len(), x))
            .map_or(f64::NAN, |p| p[0])
    }

    fn predict(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        let m = FeatureMatrix::new(
            self.pipeline.input_columns.clone(),
            x.clone(),
            DVector::zeros(x.nrows()),
            "target",
        )?;
        self.predict_matrix(&m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub learner: usize,
    pub seed: u64,
    pub hidden: usize,
    pub train_mse: f64,
    pub relief_weight: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolReport {
    /// One entry per pool member, in training order.
    pub entries: Vec<PoolEntry>,
    /// Learner indices by RReliefF rank.
    pub order: Vec<usize>,
    pub trace: Vec<SearchStep>,
}

impl PoolReport {
    /// `learner,seed,hidden,train_mse,relief_weight,selected`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("learner,seed,hidden,train_mse,relief_weight,selected\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.learner, e.seed, e.hidden, e.train_mse, e.relief_weight, e.selected
            ));
        }
        out
    }

    /// `size,cv_rmse,learner` where `learner` joined at that size.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("size,cv_rmse,learner\n");
        for s in &self.trace {
            out.push_str(&format!("{},{},{}\n", s.size, s.cv_rmse, self.order[s.size - 1]));
        }
        out
    }
}

/// Everything produced by [`fit_ensemble`].
#[derive(Debug, Clone)]
pub struct EnsembleFit {
    pub model: EnsembleModel,
    pub pool: Vec<BaseLearner>,
    pub report: PoolReport,
    pub preprocessing: PipelineFit,
}

/// Fit the preprocessing stages on `train`, train the pool, rank and select
/// learners and weight them.
pub fn fit_ensemble(
    train: &FeatureMatrix,
    featurizer: &Featurizer,
    cfg: &PipelineConfig,
    stages: &[Stage],
    seed: u64,
) -> Result<EnsembleFit> {
    let pre = fit_pipeline(train, cfg, stages, true, seed).context("fitting preprocessing")?;
    let data = &pre.train;
    let pool = train_pool(data, &cfg.ensemble, &cfg.mlp, derive_seed(seed, streams::POOL))?;
    let predictions = learner_predictions(&pool, data)?;
    let ranked = rank_learners(&predictions, data, &cfg.relief, derive_path(seed, &[streams::POOL, streams::RELIEF]))
        .context("ranking base learners")?;
    let (selected, trace) = select_learners(&pool, &ranked.order, &predictions, data, &cfg.ensemble)?;

    let learners: Vec<BaseLearner> = selected.iter().map(|&j| pool[j].clone()).collect();
    let errors: Vec<f64> = learners.iter().map(|l| l.train_error).collect();
    let weight_params = weight_params_for(&errors, &cfg.ensemble)?;
    let weights = compute_weights(&errors, &weight_params)?;

    let entries = pool
        .iter()
        .enumerate()
        .map(|(j, l)| PoolEntry {
            learner: j,
            seed: l.seed,
            hidden: l.hidden_size,
            train_mse: l.train_error,
            relief_weight: ranked.weights[j],
            selected: selected.contains(&j),
        })
        .collect();
    Ok(EnsembleFit {
        model: EnsembleModel {
            featurizer: featurizer.clone(),
            pipeline: pre.pipeline.clone(),
            learners,
            weights,
            weight_params,
        },
        pool,
        report: PoolReport {
            entries,
            order: ranked.order,
            trace,
        },
        preprocessing: pre,
    })
}

/// Screen the whole dataset (when configured) and fit the ensemble on the
/// surviving rows, seeded by `cfg.seed`.
pub fn train_ensemble(base: &FeatureMatrix, featurizer: &Featurizer, cfg: &PipelineConfig) -> Result<(EnsembleFit, Option<Screening>)> {
    let screening = screen_dataset(base, cfg)?;
    let data = match &screening {
        Some(s) => base.select_rows(&s.kept_rows)?,
        None => base.clone(),
    };
    let fit = fit_ensemble(&data, featurizer, cfg, &model_stages(cfg), cfg.seed)?;
    Ok((fit, screening))
}
