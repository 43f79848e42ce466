mod common;

use common::{close, matrix, names, normal, random_linear, uniform};
use cropyield::dataset::{generate_synthetic, FeatureMatrix, MonthEncoding, SyntheticSpec};
use cropyield::pipeline::{log_target_of, screen_outliers};
use cropyield::preprocess::{
    apply_scaler, cooks_distance, fit_scaler_all, log_transform, mean_std, remove_outliers, OutlierReport, OutlierThreshold,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn two_pass(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mut mean = 0.0;
    for x in v {
        mean += x;
    }
    mean /= n;
    let mut ss = 0.0;
    for x in v {
        ss += (x - mean) * (x - mean);
    }
    (mean, (ss / (n - 1.0)).sqrt())
}

#[test]
fn mean_std_matches_two_pass() {
    let v = normal(200, 4);
    let (m, s) = mean_std(&v);
    let (em, es) = two_pass(&v);
    assert!(close(m, em, 1e-14) && close(s, es, 1e-14));
}

#[test]
fn scaled_fit_data_is_standardised() {
    let m = random_linear(40, 3, 1);
    let scaled = apply_scaler(&fit_scaler_all(&m).unwrap(), &m).unwrap();
    for j in 0..3 {
        let (mean, sd) = two_pass(&scaled.column(j));
        assert!(mean.abs() < 1e-12, "mean {mean}");
        assert!((sd - 1.0).abs() < 1e-12, "sd {sd}");
    }
}

#[test]
fn scaler_applies_training_moments_to_new_rows() {
    let train = random_linear(30, 2, 2);
    let test = random_linear(10, 2, 3);
    let state = fit_scaler_all(&train).unwrap();
    let scaled = apply_scaler(&state, &test).unwrap();
    for j in 0..2 {
        let (mean, sd) = two_pass(&train.column(j));
        for i in 0..10 {
            let expected = (test.values()[(i, j)] - mean) / sd;
            assert!(close(scaled.values()[(i, j)], expected, 1e-14));
        }
    }
}

fn skewness(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let m2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = v.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

#[test]
fn log_reduces_right_skew() {
    let z = normal(500, 8);
    let skewed: Vec<f64> = z.iter().map(|v| (0.8 * v).exp()).collect();
    let m = matrix(&skewed.iter().map(|&v| vec![v]).collect::<Vec<_>>(), z.clone());
    let logged = log_transform(&m, &names(1)).unwrap();
    let before = skewness(&skewed);
    let after = skewness(&logged.column(0));
    assert!(before > 1.0);
    assert!(after.abs() < before.abs(), "{after} vs {before}");
}

/// Cook's distance by definition: refit without each row and measure how
/// far every fitted value moves.
fn cooks_by_refit(m: &FeatureMatrix) -> Vec<f64> {
    let (n, f) = (m.n_samples(), m.n_features());
    let p = f + 1;
    let design = |rows: &[usize]| DMatrix::from_fn(rows.len(), p, |r, c| if c == 0 { 1.0 } else { m.values()[(rows[r], c - 1)] });
    let solve = |rows: &[usize]| {
        let x = design(rows);
        let y = DVector::from_fn(rows.len(), |r, _| m.target()[rows[r]]);
        let xtx = x.transpose() * &x;
        xtx.try_inverse().unwrap() * x.transpose() * y
    };
    let all: Vec<usize> = (0..n).collect();
    let full_x = design(&all);
    let fitted = &full_x * solve(&all);
    let s2 = (m.target() - &fitted).norm_squared() / (n - p) as f64;
    (0..n)
        .map(|i| {
            let rest: Vec<usize> = all.iter().copied().filter(|&j| j != i).collect();
            let refit = &full_x * solve(&rest);
            (&fitted - refit).norm_squared() / (p as f64 * s2)
        })
        .collect()
}

#[test]
fn cooks_distance_matches_leave_one_out_refits() {
    for seed in 0..20 {
        let f = 1 + (seed as usize % 4);
        let n = f + 4 + (seed as usize % 7);
        let m = random_linear(n, f, seed);
        let got = cooks_distance(&m).unwrap();
        for (i, (a, b)) in got.distances.iter().zip(cooks_by_refit(&m)).enumerate() {
            assert!(close(*a, b, 1e-8), "seed {seed} row {i}: {a} vs {b}");
        }
    }
}

#[test]
fn hat_diagonal_sums_to_parameter_count() {
    let m = random_linear(25, 3, 5);
    let r = cooks_distance(&m).unwrap();
    let total: f64 = r.leverage.iter().sum();
    assert!((total - 4.0).abs() < 1e-10);
    assert!(r.leverage.iter().all(|&h| (-1e-10..=1.0 + 1e-10).contains(&h)));
}

#[test]
fn cooks_distance_is_invariant_under_feature_rescaling() {
    let m = random_linear(30, 3, 6);
    let scaled = apply_scaler(&fit_scaler_all(&m).unwrap(), &m).unwrap();
    let a = cooks_distance(&m).unwrap();
    let b = cooks_distance(&scaled).unwrap();
    for (x, y) in a.distances.iter().zip(&b.distances) {
        assert!(close(*x, *y, 1e-8));
    }
}

#[test]
fn planted_gross_outlier_has_the_largest_distance() {
    for seed in 0..10 {
        let spec = SyntheticSpec {
            outliers: 1,
            outlier_shift: 60.0,
            ..SyntheticSpec::default()
        };
        let d = generate_synthetic(120, seed, &spec).unwrap();
        let m = log_target_of(&d.feature_matrix(MonthEncoding::Cyclic).unwrap()).unwrap();
        let r = screen_outliers(&m, OutlierThreshold::Fixed(0.5)).unwrap();
        let argmax = (0..r.distances.len()).max_by(|&a, &b| r.distances[a].total_cmp(&r.distances[b])).unwrap();
        assert_eq!(vec![argmax], d.outliers, "seed {seed}");
        assert!(r.flagged.contains(&argmax), "seed {seed}: D = {}", r.distances[argmax]);
    }
}

#[test]
fn removal_with_empty_report_is_a_no_op() {
    let m = random_linear(12, 2, 7);
    let mut r = cooks_distance(&m).unwrap();
    r.flagged.clear();
    let once = remove_outliers(&m, &r).unwrap();
    assert_eq!(once, m);
    assert_eq!(remove_outliers(&once, &r).unwrap(), m);
}

#[test]
fn removal_drops_exactly_the_flagged_rows() {
    let m = random_linear(20, 2, 8);
    let r = OutlierReport {
        flagged: vec![0, 7, 19],
        ..cooks_distance(&m).unwrap()
    };
    let kept = remove_outliers(&m, &r).unwrap();
    assert_eq!(kept.n_samples(), 17);
    assert_eq!(kept.row(0), m.row(1));
}

proptest! {
    #[test]
    fn scaler_inverse_is_identity(seed in any::<u64>(), n in 3usize..30, f in 1usize..4) {
        let x = uniform(n, f, seed) * 50.0;
        let m = FeatureMatrix::new(names(f), x, DVector::zeros(n), "y").unwrap();
        let state = fit_scaler_all(&m).unwrap();
        let back = state.inverse(&apply_scaler(&state, &m).unwrap()).unwrap();
        for (a, b) in back.values().iter().zip(m.values().iter()) {
            prop_assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn log_preserves_column_order(v in prop::collection::vec(1e-6f64..1e6, 2..40)) {
        let m = matrix(&v.iter().map(|&x| vec![x]).collect::<Vec<_>>(), vec![0.0; v.len()]);
        let logged = log_transform(&m, &names(1)).unwrap().column(0);
        for i in 0..v.len() {
            for j in 0..v.len() {
                prop_assert_eq!(v[i] < v[j], logged[i] < logged[j]);
            }
        }
    }
}
