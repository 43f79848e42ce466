//! From raw records to the matrix a model is fitted on.
//!
//! A [`Featurizer`] turns records into the modeled feature matrix (month
//! encoding, optional `avg_temp`). [`fit_pipeline`] then runs the enabled
//! stages in order on a training matrix and returns the [`FittedPipeline`]
//! that replays them on new rows.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::{OutlierScope, PipelineConfig, Stage};
use crate::dataset::{derive_avg_temp, modeled_columns, records_to_matrix, FeatureMatrix, MonthEncoding, SampleRecord, Schema, AVG_TEMP_COLUMN};
use crate::error::{Error, Result, ResultExt};
use crate::evaluation::make_folds;
use crate::feature_select::{rrelieff, sequential_forward_select, RankedFeatures, SelectionResult};
use crate::linalg::independent_columns;
use crate::preprocess::{cooks_distance_with, fit_scaler, LogTransform, OutlierReport, OutlierThreshold, ScalerState};
use crate::regressors::{ModelFamily, Predictor};
use crate::rng::{derive_seed, streams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Featurizer {
    pub schema: Schema,
    pub month_encoding: MonthEncoding,
    pub derive_avg_temp: bool,
}

impl Featurizer {
    pub fn from_config(cfg: &PipelineConfig) -> Self {
        Self {
            schema: cfg.data.schema(),
            month_encoding: cfg.data.month_encoding,
            derive_avg_temp: cfg.data.derive_avg_temp,
        }
    }

    pub fn columns(&self) -> Vec<String> {
        let mut c = modeled_columns(&self.schema, self.month_encoding);
        if self.derive_avg_temp {
            c.push(AVG_TEMP_COLUMN.to_string());
        }
        c
    }

    pub fn matrix(&self, records: &[SampleRecord]) -> Result<FeatureMatrix> {
        let m = records_to_matrix(records, &self.schema, self.month_encoding)?;
        if self.derive_avg_temp {
            derive_avg_temp(&m)
        } else {
            Ok(m)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum FittedStep {
    /// Keep these columns, in this order.
    Select { columns: Vec<String> },
    Scale { scaler: ScalerState },
    /// Natural log of these feature columns.
    Log { columns: Vec<String> },
}

impl FittedStep {
    fn apply(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        match self {
            FittedStep::Select { columns } => m.select_named(columns),
            FittedStep::Scale { scaler } => scaler.apply(m),
            FittedStep::Log { columns } => LogTransform {
                columns: columns.clone(),
                target: false,
            }
            .apply(m),
        }
    }
}

/// Replayable preprocessing: feature steps in order plus an optional log on
/// the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub input_columns: Vec<String>,
    pub steps: Vec<FittedStep>,
    pub log_target: bool,
}

impl FittedPipeline {
    pub fn identity(input_columns: Vec<String>) -> Self {
        Self {
            input_columns,
            steps: Vec::new(),
            log_target: false,
        }
    }

    pub fn output_columns(&self) -> Vec<String> {
        let mut cols = self.input_columns.clone();
        for s in &self.steps {
            if let FittedStep::Select { columns } = s {
                cols = columns.clone();
            }
        }
        cols
    }

    fn check_columns(&self, m: &FeatureMatrix) -> Result<()> {
        if m.column_names() != self.input_columns.as_slice() {
            return Err(Error::InvalidArgument(format!(
                "expected columns {:?}, got {:?}",
                self.input_columns,
                m.column_names()
            )));
        }
        Ok(())
    }

    /// Apply the feature steps; the target is left as is.
    pub fn transform_features(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        self.check_columns(m)?;
        self.steps.iter().try_fold(m.clone(), |acc, s| s.apply(&acc))
    }

    /// Apply the feature steps and the target transform.
    pub fn transform(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        let out = self.transform_features(m)?;
        if self.log_target {
            LogTransform {
                columns: vec![],
                target: true,
            }
            .apply(&out)
        } else {
            Ok(out)
        }
    }

    /// Map a model output back to target units.
    pub fn invert_target(&self, v: f64) -> f64 {
        if self.log_target {
            v.exp()
        } else {
            v
        }
    }

    /// Map a target value into model units.
    pub fn forward_target(&self, v: f64) -> f64 {
        if self.log_target {
            v.ln()
        } else {
            v
        }
    }
}

/// Everything produced while fitting the stages on a training matrix.
#[derive(Debug, Clone)]
pub struct PipelineFit {
    pub pipeline: FittedPipeline,
    /// The training matrix after all stages, in model units.
    pub train: FeatureMatrix,
    /// Rows of the input that survived outlier removal, ascending.
    pub kept_rows: Vec<usize>,
    pub ranking: Option<RankedFeatures>,
    pub selection: Option<SelectionResult>,
    pub outliers: Option<OutlierReport>,
}

/// Cook's distances on the linearly independent columns of `m` (with an
/// intercept). Aliased columns such as `avg_temp` do not change the hat
/// matrix, so dropping them only removes the rank deficiency.
pub fn screen_outliers(m: &FeatureMatrix, threshold: OutlierThreshold) -> Result<OutlierReport> {
    let kept = independent_columns(m.values(), true);
    cooks_distance_with(&m.select_columns(&kept)?, threshold)
}

/// Log the target of `m`.
pub fn log_target_of(m: &FeatureMatrix) -> Result<FeatureMatrix> {
    LogTransform {
        columns: vec![],
        target: true,
    }
    .apply(m)
    .context("log transform of the target")
}

/// Stages a model fit runs itself: the enabled stages, minus outlier
/// removal when that is done once for the whole dataset.
pub fn model_stages(cfg: &PipelineConfig) -> Vec<Stage> {
    cfg.stages
        .enabled()
        .into_iter()
        .filter(|&s| !(s == Stage::OutlierRemoval && cfg.outliers.scope == OutlierScope::Dataset))
        .collect()
}

/// Result of whole-dataset outlier screening.
#[derive(Debug, Clone, PartialEq)]
pub struct Screening {
    pub report: OutlierReport,
    /// Surviving rows, ascending.
    pub kept_rows: Vec<usize>,
}

/// Cook's distances of the whole dataset as the configuration would screen
/// it. The regression is fitted in model units: on the log target when the
/// target transform is enabled.
pub fn outlier_report(m: &FeatureMatrix, cfg: &PipelineConfig) -> Result<OutlierReport> {
    let units = if cfg.stages.feature_transformation && cfg.transform.target {
        log_target_of(m)?
    } else {
        m.clone()
    };
    screen_outliers(&units, cfg.outliers.threshold()).context("outlier screening")
}

/// Whole-dataset screening, when outlier removal is enabled with dataset
/// scope.
pub fn screen_dataset(m: &FeatureMatrix, cfg: &PipelineConfig) -> Result<Option<Screening>> {
    if !cfg.stages.outlier_removal || cfg.outliers.scope != OutlierScope::Dataset {
        return Ok(None);
    }
    let report = outlier_report(m, cfg)?;
    let kept_rows = (0..m.n_samples())
        .filter(|i| report.flagged.binary_search(i).is_err())
        .collect();
    Ok(Some(Screening { report, kept_rows }))
}

/// Fit `stages` in order on `m`. When `log_target` is false the target is
/// never transformed, even by the transformation stage.
pub fn fit_pipeline(m: &FeatureMatrix, cfg: &PipelineConfig, stages: &[Stage], log_target: bool, seed: u64) -> Result<PipelineFit> {
    let mut current = m.clone();
    let mut fit = PipelineFit {
        pipeline: FittedPipeline::identity(m.column_names().to_vec()),
        train: m.clone(),
        kept_rows: (0..m.n_samples()).collect(),
        ranking: None,
        selection: None,
        outliers: None,
    };
    for &stage in stages {
        match stage {
            Stage::FeatureSelection => {
                let ranking = rrelieff(&current, &cfg.relief, derive_seed(seed, streams::RELIEF))
                    .context("feature ranking")?;
                let folds = make_folds(current.n_samples(), cfg.evaluation.folds, derive_seed(seed, streams::FOLDS))?;
                let evaluator = cfg.selection_evaluator();
                let selection = sequential_forward_select(
                    &current,
                    &ranking,
                    evaluator.as_ref(),
                    &folds,
                    derive_seed(seed, streams::SELECTION),
                    cfg.selection.patience,
                )?;
                let step = FittedStep::Select {
                    columns: selection.selected_names.clone(),
                };
                current = step.apply(&current)?;
                fit.pipeline.steps.push(step);
                fit.ranking = Some(ranking);
                fit.selection = Some(selection);
            }
            Stage::FeatureScaling => {
                let columns: Vec<String> = if cfg.scaling.columns.is_empty() {
                    current.column_names().to_vec()
                } else {
                    cfg.scaling
                        .columns
                        .iter()
                        .filter(|c| current.column_index(c).is_some())
                        .cloned()
                        .collect()
                };
                let scaler = fit_scaler(&current, &columns).context("feature scaling")?;
                let step = FittedStep::Scale { scaler };
                current = step.apply(&current)?;
                fit.pipeline.steps.push(step);
            }
            Stage::OutlierRemoval => {
                let report = screen_outliers(&current, cfg.outliers.threshold()).context("outlier screening")?;
                let keep: Vec<usize> = (0..current.n_samples())
                    .filter(|i| report.flagged.binary_search(i).is_err())
                    .collect();
                current = current.select_rows(&keep)?;
                fit.kept_rows = keep.iter().map(|&i| fit.kept_rows[i]).collect();
                fit.outliers = Some(report);
            }
            Stage::FeatureTransformation => {
                let columns: Vec<String> = cfg
                    .transform
                    .columns
                    .iter()
                    .filter(|c| current.column_index(c).is_some())
                    .cloned()
                    .collect();
                if !columns.is_empty() {
                    let step = FittedStep::Log { columns };
                    current = step.apply(&current).context("feature transformation")?;
                    fit.pipeline.steps.push(step);
                }
                if log_target && cfg.transform.target {
                    current = log_target_of(&current)?;
                    fit.pipeline.log_target = true;
                }
            }
        }
    }
    fit.train = current;
    Ok(fit)
}

/// Predictor that replays a fitted pipeline before the wrapped model and
/// maps outputs back to target units.
#[derive(Debug)]
pub struct PipelinePredictor {
    pub pipeline: FittedPipeline,
    pub model: Box<dyn Predictor>,
}

impl Predictor for PipelinePredictor {
    fn n_features(&self) -> usize {
        self.pipeline.input_columns.len()
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        let m = DMatrix::from_row_slice(1, x.len(), x);
        self.predict(&m).map_or(f64::NAN, |p| p[0])
    }

    fn predict(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.ncols(),
            });
        }
        let m = FeatureMatrix::new(
            self.pipeline.input_columns.clone(),
            x.clone(),
            DVector::zeros(x.nrows()),
            "target",
        )?;
        let z = self.pipeline.transform_features(&m)?;
        Ok(self.model.predict(z.values())?.map(|v| self.pipeline.invert_target(v)))
    }
}

/// A model family whose every fit first fits the preprocessing stages on
/// the training rows alone.
#[derive(Debug)]
pub struct PipelineFamily<'a> {
    pub config: &'a PipelineConfig,
    pub stages: Vec<Stage>,
    pub log_target: bool,
    pub inner: &'a dyn ModelFamily,
}

impl ModelFamily for PipelineFamily<'_> {
    fn name(&self) -> String {
        self.inner.name()
    }

    fn min_train_rows(&self) -> usize {
        self.inner.min_train_rows()
    }

    fn fit(&self, train: &FeatureMatrix, seed: u64) -> Result<Box<dyn Predictor>> {
        let fit = fit_pipeline(train, self.config, &self.stages, self.log_target, seed)?;
        let model = self.inner.fit(&fit.train, derive_seed(seed, streams::MODEL))?;
        Ok(Box::new(PipelinePredictor {
            pipeline: fit.pipeline,
            model,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SyntheticSpec};
    use crate::regressors::OlsFamily;

    fn data() -> FeatureMatrix {
        let spec = SyntheticSpec {
            distractors: 2,
            ..Default::default()
        };
        let d = generate_synthetic(60, 5, &spec).unwrap();
        Featurizer {
            schema: d.schema.clone(),
            month_encoding: MonthEncoding::Cyclic,
            derive_avg_temp: true,
        }
        .matrix(&d.records)
        .unwrap()
    }

    #[test]
    fn replay_matches_fit_output() {
        let m = data();
        let cfg = PipelineConfig::default();
        let fit = fit_pipeline(&m, &cfg, &cfg.stages.enabled(), true, 1).unwrap();
        let replay = fit.pipeline.transform(&m.select_rows(&fit.kept_rows).unwrap()).unwrap();
        assert_eq!(replay, fit.train);
        assert_eq!(fit.pipeline.output_columns(), fit.train.column_names());
        assert!(fit.pipeline.log_target);
    }

    #[test]
    fn pipeline_family_predicts_in_target_units() {
        let m = data();
        let cfg = PipelineConfig::default();
        let fam = PipelineFamily {
            config: &cfg,
            stages: vec![Stage::FeatureScaling, Stage::FeatureTransformation],
            log_target: true,
            inner: &OlsFamily,
        };
        let p = fam.fit(&m, 3).unwrap().predict(m.values()).unwrap();
        let mean_truth = m.target().mean();
        assert!((p.mean() / mean_truth - 1.0).abs() < 0.2);
    }
}
