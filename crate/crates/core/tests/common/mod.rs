#![allow(dead_code)]

use cropyield::config::PipelineConfig;
use cropyield::dataset::{generate_synthetic, FeatureMatrix};
use cropyield::pipeline::Featurizer;
use cropyield::rng::rng_from_seed;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn names(f: usize) -> Vec<String> {
    (0..f).map(|j| format!("x{j}")).collect()
}

pub fn matrix(rows: &[Vec<f64>], y: Vec<f64>) -> FeatureMatrix {
    let f = rows.first().map_or(0, Vec::len);
    FeatureMatrix::from_rows(names(f), rows, y, "y").unwrap()
}

pub fn uniform(n: usize, f: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from_seed(seed);
    DMatrix::from_fn(n, f, |_, _| rng.random_range(-1.0..1.0))
}

pub fn normal(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Uniform features in [-1, 1) and a target that is a noisy linear function
/// of them.
pub fn random_linear(n: usize, f: usize, seed: u64) -> FeatureMatrix {
    let x = uniform(n, f, seed);
    let noise = normal(n, seed ^ 0x5eed);
    let y = DVector::from_fn(n, |i, _| {
        1.0 + (0..f).map(|j| (j as f64 + 1.0) * x[(i, j)]).sum::<f64>() + 0.3 * noise[i]
    });
    FeatureMatrix::new(names(f), x, y, "y").unwrap()
}

/// The featurized canonical synthetic dataset for `seed`.
pub fn canonical(seed: u64) -> (PipelineConfig, Featurizer, FeatureMatrix) {
    let cfg = PipelineConfig::canonical();
    let d = generate_synthetic(cfg.synthetic.n, seed, &cfg.synthetic.spec).unwrap();
    let f = Featurizer::from_config(&cfg);
    let m = f.matrix(&d.records).unwrap();
    (cfg, f, m)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
