use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cropyield::config::PipelineConfig;
use cropyield::dataset::{correlation_report, generate_synthetic, read_records_file, write_records};
use cropyield::ensemble::{train_ensemble, EnsembleModel};
use cropyield::evaluation::{evaluate_holdout, stage_report, HoldoutOptions};
use cropyield::pipeline::{outlier_report, Featurizer};
use cropyield::{Error, Result};

/// Crop-yield regression pipeline: inspect data, generate synthetic data,
/// train and evaluate the selective network ensemble, and predict.
#[derive(Debug, Parser)]
#[command(name = "cropyield", version)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Pipeline configuration (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the correlation and Cook's-distance reports of a dataset.
    Inspect {
        #[arg(long)]
        data: PathBuf,
        /// Output directory; reports go to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a synthetic dataset in the canonical CSV layout.
    Synth {
        /// Output CSV file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Train the ensemble on a dataset and save it.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Where to write the model file.
        #[arg(long)]
        model: PathBuf,
        /// Directory for the pool, selection and outlier reports.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Stage-by-stage cross-validation and a hold-out comparison.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        /// Output directory; reports go to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Predict yields for a dataset with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Output CSV file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Write named reports into `out`, or print them to stdout separated by
/// blank lines.
fn emit(out: Option<&Path>, reports: &[(&str, String)]) -> Result<()> {
    match out {
        Some(dir) => {
            create_dir(dir)?;
            for (name, body) in reports {
                write_file(&dir.join(name), body)?;
                log::info!("wrote {}", dir.join(name).display());
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            for (i, (_, body)) in reports.iter().enumerate() {
                if i > 0 {
                    writeln!(stdout).map_err(|e| Error::io("<stdout>", e))?;
                }
                stdout.write_all(body.as_bytes()).map_err(|e| Error::io("<stdout>", e))?;
            }
        }
    }
    Ok(())
}

fn load_matrix(data: &Path, cfg: &PipelineConfig) -> Result<(Featurizer, cropyield::dataset::FeatureMatrix)> {
    let featurizer = Featurizer::from_config(cfg);
    let records = read_records_file(data, &featurizer.schema)?;
    let m = featurizer.matrix(&records)?;
    Ok((featurizer, m))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Inspect { data, out, common } => {
            let cfg = load_config(&common)?;
            let (_, m) = load_matrix(&data, &cfg)?;
            let corr = correlation_report(&m)?;
            let outliers = outlier_report(&m, &cfg)?;
            eprintln!(
                "{} samples, {} features; {} flagged at Cook's distance > {}",
                m.n_samples(),
                m.n_features(),
                outliers.flagged.len(),
                outliers.threshold
            );
            emit(out.as_deref(), &[("correlation.csv", corr.to_csv()), ("outliers.csv", outliers.to_csv())])
        }
        Command::Synth { out, common } => {
            let cfg = load_config(&common)?;
            let d = generate_synthetic(cfg.synthetic.n, cfg.seed, &cfg.synthetic.spec)?;
            let mut buf = Vec::new();
            write_records(&mut buf, &d.records, &d.schema)?;
            let text = String::from_utf8(buf).expect("CSV output is UTF-8");
            if d.schema.extra_features != cfg.data.extra_features {
                eprintln!(
                    "note: this config lists data.extra_features = {:?}; loading the file needs {:?}",
                    cfg.data.extra_features,
                    d.schema.extra_features
                );
            }
            match out {
                Some(path) => write_file(&path, &text),
                None => emit(None, &[("", text)]),
            }
        }
        Command::Train { data, model, out, common } => {
            let cfg = load_config(&common)?;
            let (featurizer, m) = load_matrix(&data, &cfg)?;
            let (fit, screening) = train_ensemble(&m, &featurizer, &cfg)?;
            fit.model.save(&model)?;
            eprintln!(
                "trained on {} rows: {} of {} learners selected, features {:?}",
                fit.preprocessing.train.n_samples(),
                fit.model.learners.len(),
                fit.pool.len(),
                fit.model.pipeline.output_columns()
            );
            if let Some(dir) = out {
                let mut reports = vec![
                    ("pool.csv", fit.report.to_csv()),
                    ("learner_selection.csv", fit.report.trace_csv()),
                ];
                if let (Some(ranking), Some(selection)) = (&fit.preprocessing.ranking, &fit.preprocessing.selection) {
                    reports.push(("feature_ranking.csv", ranking.to_csv()));
                    reports.push(("feature_selection.csv", selection.to_csv(ranking)));
                }
                if let Some(report) = screening.as_ref().map(|s| &s.report).or(fit.preprocessing.outliers.as_ref()) {
                    reports.push(("outliers.csv", report.to_csv()));
                }
                emit(Some(&dir), &reports)?;
            }
            Ok(())
        }
        Command::Evaluate { data, out, common } => {
            let cfg = load_config(&common)?;
            let (featurizer, m) = load_matrix(&data, &cfg)?;
            let stages = stage_report(&m, &cfg, cfg.seed)?;
            let holdout = evaluate_holdout(&m, &featurizer, &cfg, &HoldoutOptions::from_config(&cfg), cfg.seed)?;
            emit(
                out.as_deref(),
                &[
                    ("metrics.txt", holdout.report.ensemble.metrics.to_kv()),
                    ("stages.csv", stages.to_csv()),
                    ("holdout.csv", holdout.report.to_csv()),
                ],
            )
        }
        Command::Predict { model, data, out } => {
            let model = EnsembleModel::load(&model)?;
            let records = read_records_file(&data, &model.featurizer.schema)?;
            let pred = model.predict_records(&records)?;
            let mut text = String::from("row,year,month,prediction\n");
            for (i, (r, p)) in records.iter().zip(pred.iter()).enumerate() {
                text.push_str(&format!("{},{},{},{p}\n", i + 1, r.year, r.month));
            }
            match out {
                Some(path) => write_file(&path, &text),
                None => emit(None, &[("", text)]),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_internal() { 2 } else { 1 })
        }
    }
}
