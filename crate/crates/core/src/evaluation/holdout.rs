//! Hold-out comparison of the ensemble with single-model baselines.

use serde::{Deserialize, Serialize};

use super::{grid_product, grid_search, holdout_indices, make_folds, metrics, MetricsReport};
use crate::config::PipelineConfig;
use crate::dataset::FeatureMatrix;
use crate::ensemble::{fit_ensemble, EnsembleFit};
use crate::error::{Error, Result, ResultExt};
use crate::pipeline::{model_stages, screen_dataset, Featurizer, FittedPipeline, Screening};
use crate::regressors::{GprParams, MlpConfig, MlpFamily, ModelFamily, OlsFamily, Predictor};
use crate::rng::{derive_path, derive_seed, streams};

/// Which baselines to fit next to the ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutOptions {
    /// Choose the single network's hidden size by CV over the configured
    /// grid; otherwise use `mlp.hidden_size`.
    pub tune_mlp: bool,
    /// Independent trainings of the single network.
    pub mlp_replicates: usize,
    pub gpr: bool,
    pub mlr: bool,
}

impl HoldoutOptions {
    pub fn from_config(cfg: &PipelineConfig) -> Self {
        Self {
            tune_mlp: true,
            mlp_replicates: cfg.evaluation.mlp_replicates,
            gpr: true,
            mlr: true,
        }
    }
}

/// Hold-out scores of one model, in yield units and in log-yield units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub model: String,
    pub metrics: MetricsReport,
    pub log_metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub n_train: usize,
    pub n_test: usize,
    /// Rows dropped by whole-dataset screening, before the split.
    pub screened_out: Vec<usize>,
    pub ensemble: ModelScore,
    pub ensemble_size: usize,
    /// One score per replicate of the single network.
    pub mlp_replicates: Vec<ModelScore>,
    pub mlp_hidden: usize,
    pub gpr: Option<ModelScore>,
    pub gpr_params: Option<GprParams>,
    pub mlr: Option<ModelScore>,
}

impl HoldoutReport {
    pub fn mean_mlp_r2(&self, log_units: bool) -> f64 {
        mean(self.mlp_replicates.iter().map(|s| r2_of(s, log_units)))
    }

    pub fn mean_mlp_rmse(&self, log_units: bool) -> f64 {
        mean(self.mlp_replicates.iter().map(|s| pick(s, log_units).rmse))
    }

    /// `model,units,n,mae,mse,rmse,r2`, single-network replicates averaged.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,units,n,mae,mse,rmse,r2\n");
        let mut push = |name: &str, units: &str, m: &MetricsReport| {
            out.push_str(&format!("{name},{units},{}\n", m.csv_row()));
        };
        let mut rows: Vec<(String, MetricsReport, MetricsReport)> =
            vec![("ensemble".into(), self.ensemble.metrics, self.ensemble.log_metrics)];
        if !self.mlp_replicates.is_empty() {
            rows.push((
                format!("ANN(hidden={})", self.mlp_hidden),
                average(self.mlp_replicates.iter().map(|s| &s.metrics)),
                average(self.mlp_replicates.iter().map(|s| &s.log_metrics)),
            ));
        }
        for s in [&self.gpr, &self.mlr].into_iter().flatten() {
            rows.push((s.model.clone(), s.metrics, s.log_metrics));
        }
        for (name, m, l) in &rows {
            push(name, "yield", m);
            push(name, "log_yield", l);
        }
        out
    }
}

fn pick(s: &ModelScore, log_units: bool) -> &MetricsReport {
    if log_units {
        &s.log_metrics
    } else {
        &s.metrics
    }
}

fn r2_of(s: &ModelScore, log_units: bool) -> f64 {
    pick(s, log_units).r2.unwrap_or(f64::NAN)
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = it.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn average<'a>(it: impl Iterator<Item = &'a MetricsReport>) -> MetricsReport {
    let v: Vec<&MetricsReport> = it.collect();
    let k = v.len() as f64;
    let mse = v.iter().map(|m| m.mse).sum::<f64>() / k;
    MetricsReport {
        n: v[0].n,
        mae: v.iter().map(|m| m.mae).sum::<f64>() / k,
        mse,
        rmse: v.iter().map(|m| m.rmse).sum::<f64>() / k,
        r2: v.iter().map(|m| m.r2).sum::<Option<f64>>().map(|s| s / k),
    }
}

/// Score yield-unit predictions against yield-unit truth, also in log units.
fn score(model: String, truth: &[f64], pred: &[f64]) -> Result<ModelScore> {
    let metrics = metrics(truth, pred)?;
    let lt: Vec<f64> = truth.iter().map(|v| v.ln()).collect();
    let lp: Vec<f64> = pred.iter().map(|v| v.ln()).collect();
    Ok(ModelScore {
        model,
        metrics,
        log_metrics: super::metrics(&lt, &lp)?,
    })
}

/// Everything produced by [`evaluate_holdout`].
#[derive(Debug)]
pub struct HoldoutOutcome {
    pub report: HoldoutReport,
    pub ensemble: EnsembleFit,
    pub screening: Option<Screening>,
    /// Row indices (after screening) of the train and test sides.
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

fn predict_yield(pipeline: &FittedPipeline, model: &dyn Predictor, test: &FeatureMatrix) -> Result<Vec<f64>> {
    let x = pipeline.transform_features(test)?;
    Ok(model.predict(x.values())?.iter().map(|&v| pipeline.invert_target(v)).collect())
}

/// Screen the dataset, split off a hold-out set, fit the ensemble and the
/// baselines on the training side only and score everything on the test
/// side. All baselines share the ensemble's fitted preprocessing.
pub fn evaluate_holdout(
    base: &FeatureMatrix,
    featurizer: &Featurizer,
    cfg: &PipelineConfig,
    opts: &HoldoutOptions,
    seed: u64,
) -> Result<HoldoutOutcome> {
    let screening = screen_dataset(base, cfg)?;
    let data = match &screening {
        Some(s) => base.select_rows(&s.kept_rows)?,
        None => base.clone(),
    };
    let (train_rows, test_rows) =
        holdout_indices(data.n_samples(), cfg.evaluation.holdout_fraction, derive_seed(seed, streams::HOLDOUT))?;
    let train = data.select_rows(&train_rows)?;
    let test = data.select_rows(&test_rows)?;
    let truth: Vec<f64> = test.target().iter().copied().collect();

    let stages = model_stages(cfg);
    let fit = fit_ensemble(&train, featurizer, cfg, &stages, seed).context("fitting the ensemble")?;
    let ens_pred: Vec<f64> = fit.model.predict_matrix(&test)?.iter().copied().collect();
    let ensemble = score("ensemble".into(), &truth, &ens_pred)?;

    let pipeline = &fit.model.pipeline;
    let prepared = &fit.preprocessing.train;
    let plan = make_folds(prepared.n_samples(), cfg.evaluation.folds, derive_path(seed, &[streams::GRID, streams::FOLDS]))?;

    let mlp_hidden = if opts.tune_mlp && opts.mlp_replicates > 0 {
        let grid = grid_product(&[(
            "hidden_size",
            cfg.evaluation.mlp_hidden_grid.iter().map(|&h| h as f64).collect(),
        )]);
        let result = grid_search(
            prepared,
            |p| {
                let config = MlpConfig {
                    hidden_size: p[0].1 as usize,
                    ..cfg.mlp.clone()
                };
                config.validate()?;
                Ok(Box::new(MlpFamily { config }) as Box<dyn ModelFamily>)
            },
            &grid,
            &plan,
            derive_path(seed, &[streams::GRID, 1]),
        )
        .context("tuning the single network")?;
        result.best[0].1 as usize
    } else {
        cfg.mlp.hidden_size
    };
    let mlp_family = MlpFamily {
        config: MlpConfig {
            hidden_size: mlp_hidden,
            ..cfg.mlp.clone()
        },
    };
    let mut mlp_replicates = Vec::with_capacity(opts.mlp_replicates);
    for r in 0..opts.mlp_replicates {
        let model = mlp_family.fit(prepared, derive_path(seed, &[streams::MODEL, r as u64]))?;
        let pred = predict_yield(pipeline, model.as_ref(), &test)?;
        mlp_replicates.push(score(mlp_family.name(), &truth, &pred)?);
    }

    let (gpr, gpr_params) = if opts.gpr {
        let params = if cfg.gpr.tune {
            let grid = grid_product(&[
                ("length_scale", cfg.gpr.length_scales.clone()),
                ("noise_variance", cfg.gpr.noise_variances.clone()),
            ]);
            let result = grid_search(
                prepared,
                |p| {
                    Ok(Box::new(cfg.gpr.family(GprParams {
                        signal_variance: cfg.gpr.signal_variance,
                        length_scale: p[0].1,
                        noise_variance: p[1].1,
                    })) as Box<dyn ModelFamily>)
                },
                &grid,
                &plan,
                derive_path(seed, &[streams::GRID, 2]),
            )
            .context("tuning GPR")?;
            GprParams {
                signal_variance: cfg.gpr.signal_variance,
                length_scale: result.best[0].1,
                noise_variance: result.best[1].1,
            }
        } else {
            cfg.gpr.params()
        };
        let model = cfg.gpr.family(params).fit(prepared, 0)?;
        let pred = predict_yield(pipeline, model.as_ref(), &test)?;
        (Some(score("GPR".into(), &truth, &pred)?), Some(params))
    } else {
        (None, None)
    };

    let mlr = if opts.mlr {
        let model = OlsFamily.fit(prepared, 0)?;
        let pred = predict_yield(pipeline, model.as_ref(), &test)?;
        Some(score("MLR".into(), &truth, &pred)?)
    } else {
        None
    };

    if ens_pred.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("ensemble produced non-finite predictions".into()));
    }
    Ok(HoldoutOutcome {
        report: HoldoutReport {
            n_train: train.n_samples(),
            n_test: test.n_samples(),
            screened_out: screening
                .as_ref()
                .map(|s| s.report.flagged.clone())
                .unwrap_or_default(),
            ensemble,
            ensemble_size: fit.model.learners.len(),
            mlp_replicates,
            mlp_hidden,
            gpr,
            gpr_params,
            mlr,
        },
        ensemble: fit,
        screening,
        train_rows,
        test_rows,
    })
}
