//! Pipeline configuration, read from TOML. Every field has a default, so an
//! empty file is a complete configuration; unknown keys are rejected.
//!
//! ```toml
//! seed = 42
//! paper_faithful = false
//!
//! [stages]
//! order = ["feature_selection", "feature_scaling", "outlier_removal", "feature_transformation"]
//! outlier_removal = true
//!
//! [ensemble]
//! pool_size = 100
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{MonthEncoding, Schema, SyntheticSpec};
use crate::error::{Error, Result};
use crate::feature_select::ReliefParams;
use crate::preprocess::OutlierThreshold;
use crate::regressors::{GprFamily, GprParams, MlpConfig, MlpFamily, ModelFamily, OlsFamily, RidgeFamily, DEFAULT_MAX_SAMPLES};

/// The shipped default configuration, with comments.
pub const PAPER_DEFAULTS: &str = include_str!("../paper_defaults.toml");

/// Overrides producing the canonical benchmark dataset: the defaults plus
/// three pure-noise columns, declared so the generated file loads back.
pub const CANONICAL: &str = include_str!("../canonical.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    FeatureSelection,
    FeatureScaling,
    OutlierRemoval,
    FeatureTransformation,
}

impl Stage {
    /// Column order of the stage report.
    pub const REPORT_ORDER: [Stage; 4] = [
        Stage::FeatureSelection,
        Stage::FeatureScaling,
        Stage::OutlierRemoval,
        Stage::FeatureTransformation,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Stage::FeatureSelection => "feature_selection",
            Stage::FeatureScaling => "feature_scaling",
            Stage::OutlierRemoval => "outlier_removal",
            Stage::FeatureTransformation => "feature_transformation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed; every random draw derives from it.
    pub seed: u64,
    /// Fit preprocessing once on all rows before cross-validation instead of
    /// inside each fold.
    pub paper_faithful: bool,
    pub data: DataConfig,
    pub stages: StagesConfig,
    pub outliers: OutliersConfig,
    pub scaling: ScalingConfig,
    pub transform: TransformConfig,
    pub relief: ReliefParams,
    pub selection: SelectionConfig,
    pub mlp: MlpConfig,
    pub gpr: GprConfig,
    pub ensemble: EnsembleConfig,
    pub evaluation: EvaluationConfig,
    pub synthetic: SyntheticConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            paper_faithful: false,
            data: DataConfig::default(),
            stages: StagesConfig::default(),
            outliers: OutliersConfig::default(),
            scaling: ScalingConfig::default(),
            transform: TransformConfig::default(),
            relief: ReliefParams::default(),
            selection: SelectionConfig::default(),
            mlp: MlpConfig::default(),
            gpr: GprConfig::default(),
            ensemble: EnsembleConfig::default(),
            evaluation: EvaluationConfig::default(),
            synthetic: SyntheticConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub month_encoding: MonthEncoding,
    /// Append `avg_temp = (min_temp + max_temp) / 2`.
    pub derive_avg_temp: bool,
    /// Extra numeric predictor columns expected after the canonical ones.
    pub extra_features: Vec<String>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            month_encoding: MonthEncoding::Cyclic,
            derive_avg_temp: true,
            extra_features: Vec::new(),
        }
    }
}

impl DataConfig {
    pub fn schema(&self) -> Schema {
        Schema::with_extras(self.extra_features.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StagesConfig {
    /// Order in which enabled stages run.
    pub order: Vec<Stage>,
    pub feature_selection: bool,
    pub feature_scaling: bool,
    pub outlier_removal: bool,
    pub feature_transformation: bool,
}

impl Default for StagesConfig {
    fn default() -> Self {
        Self {
            order: Stage::REPORT_ORDER.to_vec(),
            feature_selection: true,
            feature_scaling: true,
            outlier_removal: true,
            feature_transformation: true,
        }
    }
}

impl StagesConfig {
    pub fn is_enabled(&self, stage: Stage) -> bool {
        match stage {
            Stage::FeatureSelection => self.feature_selection,
            Stage::FeatureScaling => self.feature_scaling,
            Stage::OutlierRemoval => self.outlier_removal,
            Stage::FeatureTransformation => self.feature_transformation,
        }
    }

    /// Enabled stages in run order.
    pub fn enabled(&self) -> Vec<Stage> {
        self.order.iter().copied().filter(|&s| self.is_enabled(s)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    Fixed,
    FourOverN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierScope {
    /// Screen the whole dataset once, before any split. Flagged rows are
    /// treated as bad records and leave both training and test data.
    Dataset,
    /// Screen only the training rows of each fit; test rows are kept.
    Training,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutliersConfig {
    pub rule: ThresholdRule,
    /// Cook's-distance cut-off for the `fixed` rule.
    pub threshold: f64,
    pub scope: OutlierScope,
}

impl Default for OutliersConfig {
    fn default() -> Self {
        Self {
            rule: ThresholdRule::Fixed,
            threshold: 0.5,
            scope: OutlierScope::Dataset,
        }
    }
}

impl OutliersConfig {
    pub fn threshold(&self) -> OutlierThreshold {
        match self.rule {
            ThresholdRule::Fixed => OutlierThreshold::Fixed(self.threshold),
            ThresholdRule::FourOverN => OutlierThreshold::FourOverN,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    /// Columns to standardise; empty means every remaining column.
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformConfig {
    /// Feature columns to log-transform. They must be strictly positive at
    /// that point in the stage order.
    pub columns: Vec<String>,
    /// Log-transform the yield; predictions are mapped back with `exp`.
    pub target: bool,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            columns: Vec::new(),
            target: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatorKind {
    Ols,
    Ridge,
    Gpr,
    Mlp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub evaluator: EvaluatorKind,
    pub ridge_lambda: f64,
    /// Consecutive non-improving prefixes before stopping.
    pub patience: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            evaluator: EvaluatorKind::Ridge,
            ridge_lambda: 1e-2,
            patience: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GprConfig {
    pub signal_variance: f64,
    pub length_scale: f64,
    pub noise_variance: f64,
    pub standardize_target: bool,
    pub max_samples: usize,
    /// Grid-search ℓ and σ_n² by cross-validation before use.
    pub tune: bool,
    pub length_scales: Vec<f64>,
    pub noise_variances: Vec<f64>,
}

impl Default for GprConfig {
    fn default() -> Self {
        Self {
            signal_variance: 1.0,
            length_scale: 2.0,
            // 0.16517², the tuned noise level read as a standard deviation
            noise_variance: 0.0273,
            standardize_target: true,
            max_samples: DEFAULT_MAX_SAMPLES,
            tune: true,
            length_scales: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            noise_variances: vec![0.01, 0.0273, 0.1, 0.3],
        }
    }
}

impl GprConfig {
    pub fn params(&self) -> GprParams {
        GprParams {
            signal_variance: self.signal_variance,
            length_scale: self.length_scale,
            noise_variance: self.noise_variance,
        }
    }

    pub fn family(&self, params: GprParams) -> GprFamily {
        GprFamily {
            params,
            standardize_target: self.standardize_target,
            max_samples: self.max_samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionScoring {
    /// Score a prefix on the rows its learners did not train on.
    OutOfBag,
    /// Score a prefix on every training row.
    InSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorSource {
    /// MSE on the learner's own training subsample.
    Subsample,
    /// MSE on the training rows the learner did not see.
    OutOfSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub pool_size: usize,
    pub subsample_fraction: f64,
    /// Draw subsamples with replacement.
    pub bootstrap: bool,
    pub hidden_min: usize,
    pub hidden_max: usize,
    /// Consecutive non-improving additions before selection stops.
    pub patience: usize,
    pub scoring: SelectionScoring,
    pub error_source: ErrorSource,
    /// Weight steepness; default `ln 9 / IQR(ε)`.
    pub b: Option<f64>,
    /// Weight midpoint; default `median(ε)`.
    pub c: Option<f64>,
    /// Use the increasing form `exp(b(|ε| − c))` instead of the logistic.
    pub literal_eq2: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            pool_size: 100,
            subsample_fraction: 0.8,
            bootstrap: false,
            hidden_min: 5,
            hidden_max: 30,
            patience: 5,
            scoring: SelectionScoring::OutOfBag,
            error_source: ErrorSource::Subsample,
            b: None,
            c: None,
            literal_eq2: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub folds: usize,
    pub holdout_fraction: f64,
    /// Trainings averaged per network cell of the stage report.
    pub mlp_replicates: usize,
    /// Hidden sizes searched for the single-network baseline.
    pub mlp_hidden_grid: Vec<usize>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            holdout_fraction: 0.2,
            mlp_replicates: 5,
            mlp_hidden_grid: vec![5, 10, 15, 20, 25, 30],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    /// Rows to generate.
    pub n: usize,
    pub spec: SyntheticSpec,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n: 120,
            spec: SyntheticSpec {
                outliers: 2,
                ..SyntheticSpec::default()
            },
        }
    }
}

impl PipelineConfig {
    /// The defaults with the overrides in [`CANONICAL`].
    pub fn canonical() -> Self {
        Self::from_toml(CANONICAL).expect("shipped canonical config is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let mut seen = Vec::new();
        for s in &self.stages.order {
            if seen.contains(s) {
                return bad(format!("stage {} listed twice", s.label()));
            }
            seen.push(*s);
        }
        if self.stages.enabled().len() != Stage::REPORT_ORDER.iter().filter(|&&s| self.stages.is_enabled(s)).count() {
            return bad("an enabled stage is missing from stages.order".into());
        }
        if self.outliers.rule == ThresholdRule::Fixed && !(self.outliers.threshold > 0.0) {
            return bad(format!("outlier threshold must be positive, got {}", self.outliers.threshold));
        }
        if self.relief.neighbors == 0 {
            return bad("relief.neighbors must be at least 1".into());
        }
        if self.selection.patience == 0 || self.ensemble.patience == 0 {
            return bad("patience must be at least 1".into());
        }
        if !(self.selection.ridge_lambda >= 0.0) {
            return bad("selection.ridge_lambda must be non-negative".into());
        }
        self.mlp.validate().map_err(|e| Error::Config(format!("mlp: {e}")))?;
        let e = &self.ensemble;
        if e.pool_size == 0 {
            return bad("ensemble.pool_size must be at least 1".into());
        }
        if !(e.subsample_fraction > 0.0 && e.subsample_fraction <= 1.0) {
            return bad(format!("ensemble.subsample_fraction must lie in (0, 1], got {}", e.subsample_fraction));
        }
        if e.hidden_min < crate::regressors::MIN_HIDDEN || e.hidden_max > crate::regressors::MAX_HIDDEN || e.hidden_min > e.hidden_max {
            return bad(format!(
                "ensemble hidden sizes must satisfy {} <= hidden_min <= hidden_max <= {}",
                crate::regressors::MIN_HIDDEN,
                crate::regressors::MAX_HIDDEN
            ));
        }
        if let Some(b) = e.b {
            if !(b > 0.0) {
                return bad(format!("ensemble.b must be positive, got {b}"));
            }
        }
        if self.evaluation.folds < 2 {
            return bad("evaluation.folds must be at least 2".into());
        }
        if !(self.evaluation.holdout_fraction > 0.0 && self.evaluation.holdout_fraction < 1.0) {
            return bad("evaluation.holdout_fraction must lie in (0, 1)".into());
        }
        if self.evaluation.mlp_replicates == 0 || self.evaluation.mlp_hidden_grid.is_empty() {
            return bad("evaluation needs at least one replicate and one hidden size".into());
        }
        if self.gpr.tune && (self.gpr.length_scales.is_empty() || self.gpr.noise_variances.is_empty()) {
            return bad("gpr tuning needs length_scales and noise_variances".into());
        }
        Ok(())
    }

    /// The model family used to score feature prefixes.
    pub fn selection_evaluator(&self) -> Box<dyn ModelFamily> {
        match self.selection.evaluator {
            EvaluatorKind::Ols => Box::new(OlsFamily),
            EvaluatorKind::Ridge => Box::new(RidgeFamily {
                lambda: self.selection.ridge_lambda,
                standardize: true,
            }),
            EvaluatorKind::Gpr => Box::new(self.gpr.family(self.gpr.params())),
            EvaluatorKind::Mlp => Box::new(MlpFamily {
                config: self.mlp.clone(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(PipelineConfig::from_toml("").unwrap(), PipelineConfig::default());
    }

    #[test]
    fn shipped_defaults_parse_to_the_default() {
        assert_eq!(PipelineConfig::from_toml(PAPER_DEFAULTS).unwrap(), PipelineConfig::default());
    }

    #[test]
    fn canonical_declares_its_distractors() {
        let cfg = PipelineConfig::canonical();
        assert_eq!(cfg.synthetic.spec.distractors, 3);
        assert_eq!(cfg.synthetic.spec.outliers, 2);
        assert_eq!(cfg.data.extra_features, vec!["noise_1", "noise_2", "noise_3"]);
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(PipelineConfig::from_toml("sede = 1").is_err());
        assert!(PipelineConfig::from_toml("[ensemble]\npool_size = 0").is_err());
        assert!(PipelineConfig::from_toml("[mlp]\nhidden_size = 40").is_err());
        assert!(PipelineConfig::from_toml("[stages]\norder = [\"feature_scaling\"]").is_err());
    }
}
