mod common;

use common::{close, uniform};
use cropyield::config::PipelineConfig;
use cropyield::dataset::{
    correlation_report, derive_avg_temp, generate_synthetic, load_csv, pearson, read_records, write_records,
    write_records_file, FeatureMatrix, MonthEncoding, SyntheticSpec,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn featurized(n: usize, seed: u64) -> FeatureMatrix {
    let spec = SyntheticSpec::default();
    generate_synthetic(n, seed, &spec).unwrap().feature_matrix(MonthEncoding::Cyclic).unwrap()
}

#[test]
fn loads_a_full_decade_of_monthly_rows() {
    let spec = SyntheticSpec::default();
    let d = generate_synthetic(120, 3, &spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    write_records_file(&path, &d.records, &d.schema).unwrap();
    let m = load_csv(&path, &d.schema, MonthEncoding::Cyclic).unwrap();
    assert_eq!(m.n_samples(), 120);
    assert_eq!(d.records.first().map(|r| r.year), Some(2008));
    assert_eq!(d.records.last().map(|r| (r.year, r.month)), Some((2017, 12)));
}

#[test]
fn csv_round_trip_is_identity_on_the_matrix() {
    let spec = SyntheticSpec {
        distractors: 2,
        ..SyntheticSpec::default()
    };
    let d = generate_synthetic(50, 11, &spec).unwrap();
    let mut first = Vec::new();
    write_records(&mut first, &d.records, &d.schema).unwrap();
    let records = read_records(first.as_slice(), &d.schema).unwrap();
    let mut second = Vec::new();
    write_records(&mut second, &records, &d.schema).unwrap();
    let again = read_records(second.as_slice(), &d.schema).unwrap();

    let a = d.feature_matrix(MonthEncoding::Cyclic).unwrap();
    let cfg = PipelineConfig::default();
    let to_matrix = |r: &[cropyield::dataset::SampleRecord]| {
        cropyield::dataset::records_to_matrix(r, &d.schema, cfg.data.month_encoding).unwrap()
    };
    assert_eq!(to_matrix(&records), a);
    assert_eq!(to_matrix(&again), a);
}

#[test]
fn avg_temp_is_the_elementwise_midpoint() {
    let m = featurized(80, 5);
    let with_avg = derive_avg_temp(&m).unwrap();
    let (lo, hi) = (m.require_column("min_temp").unwrap(), m.require_column("max_temp").unwrap());
    let avg = with_avg.require_column("avg_temp").unwrap();
    for i in 0..m.n_samples() {
        let expected = (m.values()[(i, lo)] + m.values()[(i, hi)]) / 2.0;
        assert_eq!(with_avg.values()[(i, avg)], expected);
    }
}

#[test]
fn report_equals_pairwise_pearson() {
    let m = featurized(60, 9);
    let report = correlation_report(&m).unwrap();
    for a in 0..m.n_features() {
        for b in 0..m.n_features() {
            let r = pearson(&m.column(a), &m.column(b)).unwrap();
            assert!((report.matrix[(a, b)] - r).abs() <= 1e-15, "({a}, {b})");
        }
        let y: Vec<f64> = m.target().iter().copied().collect();
        assert!((report.target_correlations[a] - pearson(&m.column(a), &y).unwrap()).abs() <= 1e-15);
    }
}

#[test]
fn soil_ph_correlates_negatively_with_yield_at_scale() {
    let m = featurized(10_000, 1);
    let y: Vec<f64> = m.target().iter().copied().collect();
    let ph = m.column(m.require_column("soil_ph").unwrap());
    assert!(pearson(&ph, &y).unwrap() < 0.0);
}

#[test]
fn distractors_are_uncorrelated_at_scale() {
    let spec = SyntheticSpec {
        distractors: 3,
        ..SyntheticSpec::default()
    };
    let m = generate_synthetic(10_000, 2, &spec).unwrap().feature_matrix(MonthEncoding::Cyclic).unwrap();
    let y: Vec<f64> = m.target().iter().copied().collect();
    for name in spec.distractor_names() {
        let r = pearson(&m.column(m.require_column(&name).unwrap()), &y).unwrap();
        assert!(r.abs() < 0.05, "{name}: r = {r}");
    }
}

fn matrix_strategy() -> impl Strategy<Value = DMatrix<f64>> {
    (3usize..20, 1usize..5, any::<u64>()).prop_map(|(n, f, seed)| uniform(n, f, seed))
}

proptest! {
    #[test]
    fn correlation_matrix_is_symmetric_and_bounded(x in matrix_strategy()) {
        let m = FeatureMatrix::new(common::names(x.ncols()), x.clone(), DVector::from_fn(x.nrows(), |i, _| i as f64), "y").unwrap();
        let r = correlation_report(&m).unwrap().matrix;
        for a in 0..r.nrows() {
            prop_assert_eq!(r[(a, a)], 1.0);
            for b in 0..r.ncols() {
                prop_assert_eq!(r[(a, b)], r[(b, a)]);
                prop_assert!((-1.0..=1.0).contains(&r[(a, b)]));
            }
        }
    }

    #[test]
    fn pearson_is_invariant_under_positive_affine_maps(
        x in prop::collection::vec(-10.0f64..10.0, 3..30),
        seed in any::<u64>(),
        a in 0.1f64..10.0,
        b in -10.0f64..10.0,
    ) {
        let y = common::normal(x.len(), seed);
        prop_assume!(x.iter().any(|v| *v != x[0]));
        let base = pearson(&x, &y).unwrap();
        let ax: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let ay: Vec<f64> = y.iter().map(|v| a * v + b).collect();
        prop_assert!(close(pearson(&ax, &y).unwrap(), base, 1e-12));
        prop_assert!(close(pearson(&x, &ay).unwrap(), base, 1e-12));
    }
}
