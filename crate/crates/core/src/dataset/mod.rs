//! Data schema, CSV ingestion, correlation diagnostics and synthetic data.

mod correlation;
mod matrix;
mod records;
mod synthetic;

pub use correlation::{correlation_report, pearson, CorrelationReport};
pub use matrix::FeatureMatrix;
pub use records::{
    derive_avg_temp, load_csv, modeled_columns, read_records, read_records_file,
    records_to_matrix, write_records, write_records_file, MonthEncoding, SampleRecord, Schema,
    AVG_TEMP_COLUMN, CANONICAL_COLUMNS, CARRIED_COLUMNS, TARGET_COLUMN,
};
pub use synthetic::{generate_synthetic, OutlierPlacement, SyntheticDataset, SyntheticSpec};
