use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cropyield::config::PipelineConfig;
use cropyield::dataset::{correlation_report, read_records_file};
use cropyield::ensemble::{train_ensemble, EnsembleModel};
use cropyield::pipeline::Featurizer;
use tempfile::TempDir;

// Small pool and grids so each command finishes in a few seconds.
const FAST: &str = r#"
[ensemble]
pool_size = 12
patience = 3

[mlp]
epochs = 400

[evaluation]
folds = 4
mlp_replicates = 1
mlp_hidden_grid = [5, 10]

[gpr]
length_scales = [1.0, 2.0]
noise_variances = [0.0273]
"#;

fn cropyield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cropyield"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "command failed: {}", stderr(&out));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new(config: &str) -> Self {
        let ws = Self { dir: TempDir::new().unwrap() };
        fs::write(ws.path("config.toml"), config).unwrap();
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn config(&self) -> PathBuf {
        self.path("config.toml")
    }

    fn synth(&self, name: &str) -> PathBuf {
        let out = self.path(name);
        ok(cropyield(&["synth", "--config", p(&self.config()), "--out", p(&out)]));
        out
    }
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(cropyield(&["--help"]).status.code(), Some(0));
    assert_eq!(cropyield(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(cropyield(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cropyield(&["train", "--data", "x.csv"]).status.code(), Some(1));
}

#[test]
fn synth_writes_header_plus_n_rows() {
    let ws = Workspace::new("");
    let file = ws.synth("a.csv");
    let text = fs::read_to_string(&file).unwrap();
    assert_eq!(text.lines().count(), 121);
}

#[test]
fn synth_is_byte_identical_for_a_seed() {
    let ws = Workspace::new("");
    let a = fs::read(ws.synth("a.csv")).unwrap();
    let b = fs::read(ws.synth("b.csv")).unwrap();
    assert_eq!(a, b);
    let c = ws.path("c.csv");
    ok(cropyield(&["synth", "--seed", "7", "--out", p(&c)]));
    assert_ne!(a, fs::read(c).unwrap());
}

#[test]
fn synth_output_reloads_with_the_same_config() {
    let ws = Workspace::new(cropyield::config::CANONICAL);
    let file = ws.synth("a.csv");
    let cfg = PipelineConfig::canonical();
    let records = read_records_file(&file, &cfg.data.schema()).unwrap();
    assert_eq!(records.len(), 120);
    assert_eq!(records[0].extras.len(), 3);
}

#[test]
fn synth_to_stdout() {
    let out = ok(cropyield(&["synth"]));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("year,month,"));
    assert_eq!(text.lines().count(), 121);
}

#[test]
fn inspect_writes_both_reports() {
    let ws = Workspace::new("");
    let data = ws.synth("a.csv");
    let out = ws.path("reports");
    ok(cropyield(&["inspect", "--data", p(&data), "--out", p(&out)]));
    assert!(out.join("correlation.csv").is_file());
    let outliers = fs::read_to_string(out.join("outliers.csv")).unwrap();
    assert_eq!(outliers.lines().next(), Some("index,cooks_distance,flagged"));
    assert_eq!(outliers.lines().count(), 121);
}

#[test]
fn inspect_correlation_matches_library() {
    let ws = Workspace::new("");
    let data = ws.synth("a.csv");
    let out = ws.path("reports");
    ok(cropyield(&["inspect", "--data", p(&data), "--out", p(&out)]));

    let cfg = PipelineConfig::default();
    let f = Featurizer::from_config(&cfg);
    let m = f.matrix(&read_records_file(&data, &f.schema).unwrap()).unwrap();
    let expected = correlation_report(&m).unwrap().to_csv();
    assert_eq!(fs::read_to_string(out.join("correlation.csv")).unwrap(), expected);
}

#[test]
fn inspect_names_a_missing_column() {
    let ws = Workspace::new("");
    let data = ws.synth("a.csv");
    let text = fs::read_to_string(&data).unwrap();
    let stripped: String = text
        .lines()
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            // soil_ph is the seventh column of the canonical layout
            let kept: Vec<&str> = cells.iter().enumerate().filter(|(i, _)| *i != 6).map(|(_, c)| *c).collect();
            kept.join(",") + "\n"
        })
        .collect();
    assert!(text.lines().next().unwrap().split(',').nth(6) == Some("soil_ph"));
    let bad = ws.path("bad.csv");
    fs::write(&bad, stripped).unwrap();
    let out = cropyield(&["inspect", "--data", p(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("soil_ph"), "{}", stderr(&out));
}

#[test]
fn missing_data_file_exits_one() {
    let out = cropyield(&["inspect", "--data", "/nonexistent/data.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("/nonexistent/data.csv"));
}

#[test]
fn bad_config_exits_one() {
    let ws = Workspace::new("[ensemble]\npool_sise = 3\n");
    let out = cropyield(&["synth", "--config", p(&ws.config())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("pool_sise"), "{}", stderr(&out));
}

#[test]
fn train_is_deterministic_and_matches_library() {
    let ws = Workspace::new(FAST);
    let data = ws.synth("a.csv");
    let (m1, m2) = (ws.path("m1.json"), ws.path("m2.json"));
    let reports = ws.path("reports");
    ok(cropyield(&["train", "--config", p(&ws.config()), "--data", p(&data), "--model", p(&m1), "--out", p(&reports)]));
    ok(cropyield(&["train", "--config", p(&ws.config()), "--data", p(&data), "--model", p(&m2)]));
    let bytes = fs::read(&m1).unwrap();
    assert_eq!(bytes, fs::read(&m2).unwrap());

    for name in ["pool.csv", "learner_selection.csv", "feature_ranking.csv", "feature_selection.csv", "outliers.csv"] {
        assert!(reports.join(name).is_file(), "{name} missing");
    }
    let pool = fs::read_to_string(reports.join("pool.csv")).unwrap();
    assert_eq!(pool.lines().count(), 13);

    let cfg = PipelineConfig::from_file(ws.config()).unwrap();
    let f = Featurizer::from_config(&cfg);
    let m = f.matrix(&read_records_file(&data, &f.schema).unwrap()).unwrap();
    let (fit, _) = train_ensemble(&m, &f, &cfg).unwrap();
    assert_eq!(fit.model.to_json().unwrap().into_bytes(), bytes);
}

#[test]
fn train_with_single_learner_pool() {
    let ws = Workspace::new(&format!("{FAST}\n[synthetic]\nn = 60\n").replace("pool_size = 12", "pool_size = 1"));
    let data = ws.synth("a.csv");
    let model = ws.path("m.json");
    ok(cropyield(&["train", "--config", p(&ws.config()), "--data", p(&data), "--model", p(&model)]));
    let loaded = EnsembleModel::load(&model).unwrap();
    assert_eq!(loaded.learners.len(), 1);
    assert_eq!(loaded.weights.len(), 1);
    assert!((loaded.weights[0] - 1.0).abs() < 1e-12);
    let out = ok(cropyield(&["predict", "--model", p(&model), "--data", p(&data)]));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 61);
}

#[test]
fn predict_matches_in_process_model() {
    let ws = Workspace::new(FAST);
    let data = ws.synth("a.csv");
    let model = ws.path("m.json");
    ok(cropyield(&["train", "--config", p(&ws.config()), "--data", p(&data), "--model", p(&model)]));
    let preds = ws.path("preds.csv");
    ok(cropyield(&["predict", "--model", p(&model), "--data", p(&data), "--out", p(&preds)]));

    let cfg = PipelineConfig::from_file(ws.config()).unwrap();
    let f = Featurizer::from_config(&cfg);
    let records = read_records_file(&data, &f.schema).unwrap();
    let (fit, _) = train_ensemble(&f.matrix(&records).unwrap(), &f, &cfg).unwrap();
    let expected = fit.model.predict_records(&records).unwrap();

    let text = fs::read_to_string(preds).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("row,year,month,prediction"));
    let got: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(got.len(), records.len());
    for (g, e) in got.iter().zip(expected.iter()) {
        assert_eq!(g, e);
    }
}

#[test]
fn predict_rejects_empty_data() {
    let ws = Workspace::new(&FAST.replace("pool_size = 12", "pool_size = 2"));
    let data = ws.synth("a.csv");
    let model = ws.path("m.json");
    ok(cropyield(&["train", "--config", p(&ws.config()), "--data", p(&data), "--model", p(&model)]));
    let header = fs::read_to_string(&data).unwrap().lines().next().unwrap().to_string();
    let empty = ws.path("empty.csv");
    fs::write(&empty, header + "\n").unwrap();
    let out = cropyield(&["predict", "--model", p(&model), "--data", p(&empty)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn predict_names_a_row_outside_the_log_domain() {
    let config = format!(
        "{}\n[stages]\nfeature_selection = false\nfeature_scaling = false\n\n[transform]\ncolumns = [\"rainfall\"]\n",
        FAST.replace("pool_size = 12", "pool_size = 2")
    );
    let ws = Workspace::new(&config);
    let data = ws.synth("a.csv");
    let model = ws.path("m.json");
    ok(cropyield(&["train", "--config", p(&ws.config()), "--data", p(&data), "--model", p(&model)]));

    let text = fs::read_to_string(&data).unwrap();
    let header = text.lines().next().unwrap();
    let col = header.split(',').position(|c| c == "rainfall").unwrap();
    let mut lines: Vec<String> = text.lines().take(5).map(String::from).collect();
    let mut cells: Vec<String> = lines[3].split(',').map(String::from).collect();
    cells[col] = "0".into();
    lines[3] = cells.join(",");
    let bad = ws.path("bad.csv");
    fs::write(&bad, lines.join("\n") + "\n").unwrap();

    let out = cropyield(&["predict", "--model", p(&model), "--data", p(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("row 3") && err.contains("rainfall"), "{err}");
}

#[test]
fn predict_with_missing_model_exits_one() {
    let ws = Workspace::new("");
    let data = ws.synth("a.csv");
    let out = cropyield(&["predict", "--model", p(&ws.path("nope.json")), "--data", p(&data)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn evaluate_metrics_block() {
    let ws = Workspace::new(FAST);
    let data = ws.synth("a.csv");
    let out = ws.path("eval");
    ok(cropyield(&["evaluate", "--config", p(&ws.config()), "--data", p(&data), "--out", p(&out)]));
    let text = fs::read_to_string(out.join("metrics.txt")).unwrap();
    let kv: std::collections::HashMap<&str, f64> = text
        .lines()
        .map(|l| {
            let (k, v) = l.split_once(" = ").unwrap();
            (k, v.parse().unwrap())
        })
        .collect();
    for key in ["n", "mae", "mse", "rmse", "r2"] {
        assert!(kv.contains_key(key), "{key} missing from {text}");
    }
    assert!((kv["rmse"] - kv["mse"].sqrt()).abs() <= 1e-12);

    let stages = fs::read_to_string(out.join("stages.csv")).unwrap();
    // header + 5 stages × 3 models
    assert_eq!(stages.lines().count(), 16);
    let holdout = fs::read_to_string(out.join("holdout.csv")).unwrap();
    assert!(holdout.lines().any(|l| l.starts_with("ensemble,yield,")));
}

#[test]
fn evaluate_to_stdout_is_byte_identical_across_runs() {
    let ws = Workspace::new(&format!("{FAST}\n[synthetic]\nn = 60\n"));
    let data = ws.synth("a.csv");
    let config = ws.config();
    let args = ["evaluate", "--config", p(&config), "--data", p(&data)];
    let a = ok(cropyield(&args)).stdout;
    let b = ok(cropyield(&args)).stdout;
    assert_eq!(a, b);
    assert!(String::from_utf8(a).unwrap().starts_with("n = "));
}
