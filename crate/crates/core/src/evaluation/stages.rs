//! Cross-validated RMSE of each baseline model after each cumulative
//! preprocessing stage.

use serde::{Deserialize, Serialize};

use super::{cross_validate, make_folds, rmse, FoldPlan};
use crate::config::{OutlierScope, PipelineConfig, Stage};
use crate::dataset::FeatureMatrix;
use crate::error::{Result, ResultExt};
use crate::pipeline::{fit_pipeline, log_target_of, screen_dataset, PipelineFamily};
use crate::regressors::{MlpFamily, ModelFamily, OlsFamily};
use crate::rng::{derive_path, derive_seed, streams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageCell {
    /// `raw` or a stage label.
    pub stage: String,
    pub model: String,
    /// Pooled CV RMSE in the units of that stage's target (log yield once
    /// the target is transformed); the mean over replicates.
    pub cv_rmse: f64,
    /// The same predictions mapped back to yield units.
    pub yield_rmse: f64,
    pub replicates: Vec<f64>,
    pub n_samples: usize,
    pub log_target: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    /// `fold_refit` or `paper_faithful`.
    pub mode: String,
    pub models: Vec<String>,
    pub cells: Vec<StageCell>,
}

impl StageReport {
    pub fn stages() -> Vec<String> {
        std::iter::once("raw".to_string())
            .chain(Stage::REPORT_ORDER.iter().map(|s| s.label().to_string()))
            .collect()
    }

    pub fn cell(&self, stage: &str, model: &str) -> Option<&StageCell> {
        self.cells.iter().find(|c| c.stage == stage && c.model == model)
    }

    /// `stage,model,cv_rmse,yield_rmse,replicates,n_samples,log_target,mode`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,model,cv_rmse,yield_rmse,replicates,n_samples,log_target,mode\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                c.stage,
                c.model,
                c.cv_rmse,
                c.yield_rmse,
                c.replicates.len(),
                c.n_samples,
                c.log_target,
                self.mode
            ));
        }
        out
    }
}

/// Data and in-fold stages for one report column.
struct StageData {
    matrix: FeatureMatrix,
    plan: FoldPlan,
    in_fold: Vec<Stage>,
    log_target: bool,
}

/// The stage report. Columns are cumulative: column `j` applies every
/// enabled stage among the first `j` of the report order, run in the
/// configured order. Every column uses the same fold plan and the same
/// per-model seeds, so a disabled stage repeats the previous column.
///
/// By default selection, scaling and feature transforms are refitted inside
/// each training fold. Outlier screening with dataset scope removes rows
/// from the evaluated data, and the target log transform (which has no
/// fitted state) is applied before splitting. With `paper_faithful` every
/// stage is fitted once on all rows.
pub fn stage_report(raw: &FeatureMatrix, cfg: &PipelineConfig, seed: u64) -> Result<StageReport> {
    let base_plan = make_folds(raw.n_samples(), cfg.evaluation.folds, derive_seed(seed, streams::FOLDS))?;
    let screening = if cfg.paper_faithful { None } else { screen_dataset(raw, cfg)? };
    let gpr = cfg.gpr.family(cfg.gpr.params());
    let mlp = MlpFamily {
        config: cfg.mlp.clone(),
    };
    let models: Vec<(&str, &dyn ModelFamily, usize)> = vec![
        ("MLR", &OlsFamily, 1),
        ("GPR", &gpr, 1),
        ("ANN", &mlp, cfg.evaluation.mlp_replicates),
    ];

    let mut cells = Vec::new();
    for (j, label) in StageReport::stages().iter().enumerate() {
        let prefix = &Stage::REPORT_ORDER[..j];
        let active: Vec<Stage> = cfg
            .stages
            .order
            .iter()
            .copied()
            .filter(|s| prefix.contains(s) && cfg.stages.is_enabled(*s))
            .collect();
        let data = stage_data(raw, cfg, &active, &base_plan, screening.as_ref().map(|s| &s.kept_rows), seed)
            .with_context(|| format!("preparing stage {label}"))?;
        for (model_idx, (name, family, reps)) in models.iter().enumerate() {
            let mut replicates = Vec::with_capacity(*reps);
            let mut yield_rmses = Vec::with_capacity(*reps);
            for r in 0..*reps {
                let cv_seed = derive_path(seed, &[streams::MODEL, model_idx as u64, r as u64]);
                let wrapped;
                let fam: &dyn ModelFamily = if data.in_fold.is_empty() {
                    *family
                } else {
                    wrapped = PipelineFamily {
                        config: cfg,
                        stages: data.in_fold.clone(),
                        log_target: false,
                        inner: *family,
                    };
                    &wrapped
                };
                let cv = cross_validate(&data.matrix, fam, &data.plan, cv_seed)
                    .with_context(|| format!("stage {label}, model {name}"))?;
                replicates.push(cv.pooled_rmse());
                yield_rmses.push(if data.log_target {
                    let truth: Vec<f64> = data.matrix.target().iter().map(|v| v.exp()).collect();
                    let pred: Vec<f64> = cv.predictions.iter().map(|v| v.exp()).collect();
                    rmse(&truth, &pred)?
                } else {
                    cv.pooled_rmse()
                });
            }
            cells.push(StageCell {
                stage: label.clone(),
                model: name.to_string(),
                cv_rmse: replicates.iter().sum::<f64>() / *reps as f64,
                yield_rmse: yield_rmses.iter().sum::<f64>() / *reps as f64,
                replicates,
                n_samples: data.matrix.n_samples(),
                log_target: data.log_target,
            });
        }
    }
    Ok(StageReport {
        mode: if cfg.paper_faithful { "paper_faithful" } else { "fold_refit" }.into(),
        models: models.iter().map(|m| m.0.to_string()).collect(),
        cells,
    })
}

fn stage_data(
    raw: &FeatureMatrix,
    cfg: &PipelineConfig,
    active: &[Stage],
    base_plan: &FoldPlan,
    screened_rows: Option<&Vec<usize>>,
    seed: u64,
) -> Result<StageData> {
    if cfg.paper_faithful {
        let fit = fit_pipeline(raw, cfg, active, true, seed)?;
        return Ok(StageData {
            plan: base_plan.restrict(&fit.kept_rows),
            log_target: fit.pipeline.log_target,
            matrix: fit.train,
            in_fold: Vec::new(),
        });
    }
    let mut matrix = raw.clone();
    let mut plan = base_plan.clone();
    let dataset_scope = cfg.outliers.scope == OutlierScope::Dataset;
    if active.contains(&Stage::OutlierRemoval) && dataset_scope {
        if let Some(rows) = screened_rows {
            matrix = matrix.select_rows(rows)?;
            plan = base_plan.restrict(rows);
        }
    }
    let log_target = active.contains(&Stage::FeatureTransformation) && cfg.transform.target;
    if log_target {
        matrix = log_target_of(&matrix)?;
    }
    let in_fold = active
        .iter()
        .copied()
        .filter(|&s| !(s == Stage::OutlierRemoval && dataset_scope))
        .collect();
    Ok(StageData {
        matrix,
        plan,
        in_fold,
        log_target,
    })
}
