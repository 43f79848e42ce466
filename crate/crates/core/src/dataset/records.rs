//! The observation schema and its CSV representation.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};

/// Canonical CSV header, in canonical order.
pub const CANONICAL_COLUMNS: [&str; 11] = [
    "year",
    "month",
    "min_temp",
    "max_temp",
    "humidity",
    "rainfall",
    "soil_ph",
    "labor_cost",
    "labor_training",
    "pesticide_used",
    "yield",
];

/// Columns that are parsed and kept with each record but never modeled.
pub const CARRIED_COLUMNS: [&str; 3] = ["labor_cost", "labor_training", "pesticide_used"];

pub const TARGET_COLUMN: &str = "yield";
pub const AVG_TEMP_COLUMN: &str = "avg_temp";

/// Expected file layout: the canonical columns plus optional extra numeric
/// predictor columns (appended after the canonical ones when writing).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default)]
    pub extra_features: Vec<String>,
}

impl Schema {
    pub fn with_extras(extra_features: Vec<String>) -> Self {
        Self { extra_features }
    }

    pub fn columns(&self) -> Vec<String> {
        CANONICAL_COLUMNS
            .iter()
            .map(|c| c.to_string())
            .chain(self.extra_features.iter().cloned())
            .collect()
    }
}

/// How the 1..=12 month category enters the feature matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonthEncoding {
    /// `month_sin`, `month_cos` on the unit circle.
    #[default]
    Cyclic,
    /// The raw month number as a single numeric column.
    Integer,
    /// Twelve indicator columns `month_1` .. `month_12`.
    OneHot,
}

impl MonthEncoding {
    pub fn column_names(self) -> Vec<String> {
        match self {
            MonthEncoding::Cyclic => vec!["month_sin".into(), "month_cos".into()],
            MonthEncoding::Integer => vec!["month".into()],
            MonthEncoding::OneHot => (1..=12).map(|m| format!("month_{m}")).collect(),
        }
    }

    pub fn encode(self, month: u8) -> Vec<f64> {
        match self {
            MonthEncoding::Cyclic => {
                let angle = 2.0 * PI * f64::from(month) / 12.0;
                vec![angle.sin(), angle.cos()]
            }
            MonthEncoding::Integer => vec![f64::from(month)],
            MonthEncoding::OneHot => (1..=12u8)
                .map(|m| if m == month { 1.0 } else { 0.0 })
                .collect(),
        }
    }
}

/// One monthly observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub year: i32,
    pub month: u8,
    /// °C
    pub min_temp: f64,
    /// °C
    pub max_temp: f64,
    /// percent
    pub humidity: f64,
    /// mm
    pub rainfall: f64,
    pub soil_ph: f64,
    pub labor_cost: f64,
    pub labor_training: String,
    pub pesticide_used: bool,
    /// kg
    pub yield_kg: f64,
    /// Values of [`Schema::extra_features`], in schema order.
    #[serde(default)]
    pub extras: Vec<f64>,
}

impl SampleRecord {
    /// Check the range invariants. `row` is only used for error messages.
    pub fn validate(&self, row: usize) -> Result<()> {
        let cell = |column: &str, message: String| Error::Cell {
            row,
            column: column.to_string(),
            message,
        };
        if !(1..=12).contains(&self.month) {
            return Err(cell("month", format!("{} is not in 1..=12", self.month)));
        }
        if self.min_temp > self.max_temp {
            return Err(cell(
                "min_temp",
                format!("min_temp {} exceeds max_temp {}", self.min_temp, self.max_temp),
            ));
        }
        if !(0.0..=100.0).contains(&self.humidity) {
            return Err(cell("humidity", format!("{} is not in [0, 100]", self.humidity)));
        }
        if self.rainfall < 0.0 {
            return Err(cell("rainfall", format!("{} is negative", self.rainfall)));
        }
        if !(0.0..=14.0).contains(&self.soil_ph) {
            return Err(cell("soil_ph", format!("{} is not in [0, 14]", self.soil_ph)));
        }
        if self.yield_kg < 0.0 {
            return Err(cell("yield", format!("{} is negative", self.yield_kg)));
        }
        Ok(())
    }
}

fn parse_f64(row: usize, column: &str, raw: &str) -> Result<f64> {
    let s = raw.trim();
    if s.is_empty() {
        return Err(Error::Cell {
            row,
            column: column.into(),
            message: "missing value".into(),
        });
    }
    let v: f64 = s.parse().map_err(|_| Error::Cell {
        row,
        column: column.into(),
        message: format!("cannot parse `{s}` as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Cell {
            row,
            column: column.into(),
            message: format!("non-finite value `{s}`"),
        });
    }
    Ok(v)
}

fn parse_int<T: std::str::FromStr>(row: usize, column: &str, raw: &str) -> Result<T> {
    let s = raw.trim();
    if s.is_empty() {
        return Err(Error::Cell {
            row,
            column: column.into(),
            message: "missing value".into(),
        });
    }
    s.parse().map_err(|_| Error::Cell {
        row,
        column: column.into(),
        message: format!("cannot parse `{s}` as an integer"),
    })
}

fn parse_bool(row: usize, column: &str, raw: &str) -> Result<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "y" => Ok(true),
        "false" | "0" | "no" | "n" => Ok(false),
        "" => Err(Error::Cell {
            row,
            column: column.into(),
            message: "missing value".into(),
        }),
        other => Err(Error::Cell {
            row,
            column: column.into(),
            message: format!("cannot parse `{other}` as a boolean"),
        }),
    }
}

/// Parse records from any reader. The header must contain exactly the schema
/// columns, in any order.
pub fn read_records<R: Read>(reader: R, schema: &Schema) -> Result<Vec<SampleRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].trim().is_empty()) {
        return Err(Error::Empty("file has no header row".into()));
    }

    let mut position: HashMap<String, usize> = HashMap::new();
    for (i, name) in header.iter().enumerate() {
        let name = name.trim().trim_start_matches('\u{feff}').to_string();
        if position.insert(name.clone(), i).is_some() {
            return Err(Error::DuplicateColumn(name));
        }
    }
    let expected = schema.columns();
    for col in &expected {
        if !position.contains_key(col) {
            return Err(Error::MissingColumn(col.clone()));
        }
    }
    if let Some(extra) = header
        .iter()
        .map(|h| h.trim().trim_start_matches('\u{feff}'))
        .find(|h| !expected.iter().any(|e| e == h))
    {
        return Err(Error::UnexpectedColumn(extra.to_string()));
    }

    let mut records = Vec::new();
    for (i, result) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = result.map_err(|e| Error::Csv(format!("row {row}: {e}")))?;
        let get = |col: &str| rec.get(position[col]).unwrap_or("");
        let record = SampleRecord {
            year: parse_int(row, "year", get("year"))?,
            month: parse_int(row, "month", get("month"))?,
            min_temp: parse_f64(row, "min_temp", get("min_temp"))?,
            max_temp: parse_f64(row, "max_temp", get("max_temp"))?,
            humidity: parse_f64(row, "humidity", get("humidity"))?,
            rainfall: parse_f64(row, "rainfall", get("rainfall"))?,
            soil_ph: parse_f64(row, "soil_ph", get("soil_ph"))?,
            labor_cost: parse_f64(row, "labor_cost", get("labor_cost"))?,
            labor_training: {
                let s = get("labor_training").trim();
                if s.is_empty() {
                    return Err(Error::Cell {
                        row,
                        column: "labor_training".into(),
                        message: "missing value".into(),
                    });
                }
                s.to_string()
            },
            pesticide_used: parse_bool(row, "pesticide_used", get("pesticide_used"))?,
            yield_kg: parse_f64(row, TARGET_COLUMN, get(TARGET_COLUMN))?,
            extras: schema
                .extra_features
                .iter()
                .map(|c| parse_f64(row, c, get(c)))
                .collect::<Result<_>>()?,
        };
        record.validate(row)?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::Empty("file has no data rows".into()));
    }
    Ok(records)
}

pub fn read_records_file(path: impl AsRef<Path>, schema: &Schema) -> Result<Vec<SampleRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(file, schema)
}

/// Write records in canonical column order (extras appended). Floats use the
/// shortest representation that parses back to the same value.
pub fn write_records<W: Write>(writer: W, records: &[SampleRecord], schema: &Schema) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let csv_err = |e: csv::Error| Error::Csv(e.to_string());
    w.write_record(schema.columns()).map_err(csv_err)?;
    for r in records {
        if r.extras.len() != schema.extra_features.len() {
            return Err(Error::DimensionMismatch {
                expected: schema.extra_features.len(),
                actual: r.extras.len(),
            });
        }
        let mut fields = vec![
            r.year.to_string(),
            r.month.to_string(),
            r.min_temp.to_string(),
            r.max_temp.to_string(),
            r.humidity.to_string(),
            r.rainfall.to_string(),
            r.soil_ph.to_string(),
            r.labor_cost.to_string(),
            r.labor_training.clone(),
            r.pesticide_used.to_string(),
            r.yield_kg.to_string(),
        ];
        fields.extend(r.extras.iter().map(|v| v.to_string()));
        w.write_record(&fields).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

pub fn write_records_file(
    path: impl AsRef<Path>,
    records: &[SampleRecord],
    schema: &Schema,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(std::io::BufWriter::new(file), records, schema)
}

/// Names of the modeled columns produced by [`records_to_matrix`].
pub fn modeled_columns(schema: &Schema, encoding: MonthEncoding) -> Vec<String> {
    let mut names = encoding.column_names();
    names.extend(
        ["min_temp", "max_temp", "humidity", "rainfall", "soil_ph"]
            .iter()
            .map(|s| s.to_string()),
    );
    names.extend(schema.extra_features.iter().cloned());
    names
}

/// Convert records into the modeled feature matrix: encoded month, the five
/// weather/soil predictors, then any extra predictors. `year` and the carried
/// columns are left out.
pub fn records_to_matrix(
    records: &[SampleRecord],
    schema: &Schema,
    encoding: MonthEncoding,
) -> Result<FeatureMatrix> {
    let rows: Vec<Vec<f64>> = records
        .iter()
        .map(|r| {
            let mut row = encoding.encode(r.month);
            row.extend([r.min_temp, r.max_temp, r.humidity, r.rainfall, r.soil_ph]);
            row.extend(r.extras.iter().copied());
            row
        })
        .collect();
    let target = records.iter().map(|r| r.yield_kg).collect();
    FeatureMatrix::from_rows(modeled_columns(schema, encoding), &rows, target, TARGET_COLUMN)
}

/// Read a CSV file straight into the modeled feature matrix.
pub fn load_csv(
    path: impl AsRef<Path>,
    schema: &Schema,
    encoding: MonthEncoding,
) -> Result<FeatureMatrix> {
    let records = read_records_file(path, schema)?;
    records_to_matrix(&records, schema, encoding)
}

/// Append `avg_temp = (min_temp + max_temp) / 2`.
pub fn derive_avg_temp(m: &FeatureMatrix) -> Result<FeatureMatrix> {
    let lo = m.require_column("min_temp")?;
    let hi = m.require_column("max_temp")?;
    let avg = (0..m.n_samples())
        .map(|i| (m.values()[(i, lo)] + m.values()[(i, hi)]) / 2.0)
        .collect();
    m.with_column(AVG_TEMP_COLUMN, avg)
}
