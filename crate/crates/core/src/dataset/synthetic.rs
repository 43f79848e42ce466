//! Seeded synthetic monthly yield data.
//!
//! Rows are consecutive months starting in January of `start_year`. Weather
//! follows a seasonal cycle `s(m) = sin(2π(m − 4)/12)` (peak in July):
//!
//! - mean temperature `T ~ 17 + 8 s + N(0, 1.5²)`, with a diurnal spread of
//!   `8 + U(0, 4)` giving `min_temp`/`max_temp`;
//! - humidity `70 + 12 s + N(0, 6²)`, clipped to `[5, 100]`;
//! - rainfall log-normal, `ln r ~ 4.3 + 0.9 s + N(0, 0.5²)` (right skewed);
//! - soil pH `5.5 − 0.4 (ln r − 4.3) + N(0, 0.3²)`, clipped to `[3.5, 8]`,
//!   so wetter months are more acidic.
//!
//! The noiseless log-yield is
//!
//! ```text
//! g = base + rainfall_effect · tanh((ln r − 4.3) / 0.7)
//!          + temperature_effect · exp(−((T − 22) / 6)²)
//!          + soil_ph_effect · (pH − 5.5)
//!          + seasonal_effect · cos(2π(m − 6) / 12)
//! ```
//!
//! with `T = (min_temp + max_temp) / 2`, and the recorded yield is
//! `exp(g + ε)`, `ε ~ N(0, noise_scale²)`. The target is therefore
//! log-normal and right skewed. Planted outliers add
//! `± outlier_shift · noise_scale` (random sign) to the log-yield of chosen
//! rows. By default those rows are drawn from the tenth of rows with the
//! highest leverage in the cyclic-month design, i.e. points that can pull a
//! regression fit; `outlier_placement = "random"` draws them from all rows.
//! Distractor columns `noise_1`, `noise_2`, … are independent standard
//! normals.

use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{records_to_matrix, FeatureMatrix, MonthEncoding, SampleRecord, Schema};
use crate::error::{Error, Result};
use crate::linalg::{independent_columns, orthonormal_basis, with_intercept};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub start_year: i32,
    pub base_log_yield: f64,
    pub rainfall_effect: f64,
    pub temperature_effect: f64,
    /// Per pH unit; negative means acidic soil yields more.
    pub soil_ph_effect: f64,
    pub seasonal_effect: f64,
    /// Standard deviation of the Gaussian noise on log-yield.
    pub noise_scale: f64,
    pub distractors: usize,
    pub outliers: usize,
    /// Outlier displacement in units of `noise_scale`.
    pub outlier_shift: f64,
    pub outlier_placement: OutlierPlacement,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierPlacement {
    /// Among the `max(⌈n/10⌉, outliers)` rows of highest leverage.
    #[default]
    HighLeverage,
    Random,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            start_year: 2008,
            base_log_yield: 4.3,
            rainfall_effect: 0.45,
            temperature_effect: 0.3,
            soil_ph_effect: -0.25,
            seasonal_effect: 0.15,
            noise_scale: 0.08,
            distractors: 0,
            outliers: 0,
            outlier_shift: 30.0,
            outlier_placement: OutlierPlacement::HighLeverage,
        }
    }
}

impl SyntheticSpec {
    pub fn distractor_names(&self) -> Vec<String> {
        (1..=self.distractors).map(|i| format!("noise_{i}")).collect()
    }

    pub fn schema(&self) -> Schema {
        Schema::with_extras(self.distractor_names())
    }

    /// Noiseless log-yield for a record.
    pub fn log_ground_truth(&self, r: &SampleRecord) -> f64 {
        let t = (r.min_temp + r.max_temp) / 2.0;
        let lr = r.rainfall.ln();
        self.base_log_yield
            + self.rainfall_effect * ((lr - 4.3) / 0.7).tanh()
            + self.temperature_effect * (-((t - 22.0) / 6.0).powi(2)).exp()
            + self.soil_ph_effect * (r.soil_ph - 5.5)
            + self.seasonal_effect * (2.0 * PI * (f64::from(r.month) - 6.0) / 12.0).cos()
    }

    /// Noiseless yield in kilograms.
    pub fn ground_truth(&self, r: &SampleRecord) -> f64 {
        self.log_ground_truth(r).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub records: Vec<SampleRecord>,
    pub schema: Schema,
    /// Rows whose yield was displaced, ascending.
    pub outliers: Vec<usize>,
}

impl SyntheticDataset {
    pub fn feature_matrix(&self, encoding: MonthEncoding) -> Result<FeatureMatrix> {
        records_to_matrix(&self.records, &self.schema, encoding)
    }
}

pub fn generate_synthetic(n: usize, seed: u64, spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    if n < 10 {
        return Err(Error::InvalidArgument(format!(
            "synthetic datasets need at least 10 samples, got {n}"
        )));
    }
    if !(spec.noise_scale >= 0.0) || !spec.noise_scale.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise scale must be a non-negative number, got {}",
            spec.noise_scale
        )));
    }
    if spec.outliers > n {
        return Err(Error::InvalidArgument(format!(
            "cannot plant {} outliers in {n} samples",
            spec.outliers
        )));
    }
    let mut rng = rng_from_seed(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let month = (i % 12) as u8 + 1;
        let year = spec.start_year + (i / 12) as i32;
        let s = (2.0 * PI * (f64::from(month) - 4.0) / 12.0).sin();

        let t_mean = 17.0 + 8.0 * s + 1.5 * std_normal.sample(&mut rng);
        let spread = 8.0 + 4.0 * rng.random::<f64>();
        let humidity = (70.0 + 12.0 * s + 6.0 * std_normal.sample(&mut rng)).clamp(5.0, 100.0);
        let log_rain = 4.3 + 0.9 * s + 0.5 * std_normal.sample(&mut rng);
        let soil_ph =
            (5.5 - 0.4 * (log_rain - 4.3) + 0.3 * std_normal.sample(&mut rng)).clamp(3.5, 8.0);
        let labor_cost = 300.0 + 25.0 * f64::from(year - spec.start_year)
            + 10.0 * std_normal.sample(&mut rng);
        let labor_training = if rng.random::<bool>() { "trained" } else { "basic" };
        let pesticide_used = rng.random::<bool>();
        let extras = (0..spec.distractors)
            .map(|_| std_normal.sample(&mut rng))
            .collect();
        let noise = spec.noise_scale * std_normal.sample(&mut rng);

        let mut record = SampleRecord {
            year,
            month,
            min_temp: t_mean - spread / 2.0,
            max_temp: t_mean + spread / 2.0,
            humidity,
            rainfall: log_rain.exp(),
            soil_ph,
            labor_cost,
            labor_training: labor_training.to_string(),
            pesticide_used,
            yield_kg: 0.0,
            extras,
        };
        record.yield_kg = if spec.noise_scale == 0.0 {
            spec.ground_truth(&record)
        } else {
            (spec.log_ground_truth(&record) + noise).exp()
        };
        records.push(record);
    }

    let candidates: Vec<usize> = match spec.outlier_placement {
        OutlierPlacement::Random => (0..n).collect(),
        OutlierPlacement::HighLeverage if spec.outliers > 0 => {
            let lev = leverage(&records, &spec.schema())?;
            let mut by_lev: Vec<usize> = (0..n).collect();
            by_lev.sort_by(|&a, &b| lev[b].total_cmp(&lev[a]).then(a.cmp(&b)));
            by_lev.truncate(n.div_ceil(10).max(spec.outliers));
            by_lev
        }
        OutlierPlacement::HighLeverage => Vec::new(),
    };
    let mut outliers: Vec<usize> = sample(&mut rng, candidates.len(), spec.outliers)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    outliers.sort_unstable();
    for &i in &outliers {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let r = &mut records[i];
        r.yield_kg = (r.yield_kg.ln() + sign * spec.outlier_shift * spec.noise_scale).exp();
    }

    Ok(SyntheticDataset {
        records,
        schema: spec.schema(),
        outliers,
    })
}

/// Hat-matrix diagonal of the cyclic-month design with an intercept.
fn leverage(records: &[SampleRecord], schema: &Schema) -> Result<Vec<f64>> {
    let m = records_to_matrix(records, schema, MonthEncoding::Cyclic)?;
    let x = with_intercept(m.values());
    let keep = independent_columns(m.values(), true);
    let mut cols = vec![0];
    cols.extend(keep.iter().map(|j| j + 1));
    let q = orthonormal_basis(&x.select_columns(&cols))?;
    Ok((0..q.nrows()).map(|i| q.row(i).norm_squared()).collect())
}
