use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

/// Natural-log transform of chosen feature columns and, optionally, the
/// target. Only defined for strictly positive values; nothing is shifted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogTransform {
    pub columns: Vec<String>,
    pub target: bool,
}

pub fn log_transform(m: &FeatureMatrix, columns: &[String]) -> Result<FeatureMatrix> {
    LogTransform {
        columns: columns.to_vec(),
        target: false,
    }
    .apply(m)
}

pub fn log_target(m: &FeatureMatrix) -> Result<FeatureMatrix> {
    LogTransform {
        columns: vec![],
        target: true,
    }
    .apply(m)
}

impl LogTransform {
    pub fn apply(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        let mut values = m.values().clone();
        for name in &self.columns {
            let j = m.require_column(name)?;
            for (i, v) in values.column_mut(j).iter_mut().enumerate() {
                if !(*v > 0.0) {
                    return Err(Error::Cell {
                        row: i + 1,
                        column: name.clone(),
                        message: format!("log transform needs positive values, found {v}"),
                    });
                }
                *v = v.ln();
            }
        }
        let mut target = m.target().clone();
        if self.target {
            for (i, v) in target.iter_mut().enumerate() {
                if !(*v > 0.0) {
                    return Err(Error::Cell {
                        row: i + 1,
                        column: m.target_name().to_string(),
                        message: format!("log transform needs positive values, found {v}"),
                    });
                }
                *v = v.ln();
            }
        }
        FeatureMatrix::new(m.column_names().to_vec(), values, target, m.target_name())
    }

    /// Map a prediction made on the transformed target back to original units.
    pub fn invert_target(&self, value: f64) -> f64 {
        if self.target {
            value.exp()
        } else {
            value
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(values: &[f64]) -> FeatureMatrix {
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        FeatureMatrix::from_rows(vec!["x".into()], &rows, values.to_vec(), "y").unwrap()
    }

    #[test]
    fn log_of_one_is_zero() {
        let out = log_transform(&m(&[1.0, std::f64::consts::E]), &["x".to_string()]).unwrap();
        assert_eq!(out.column(0)[0], 0.0);
        assert!((out.column(0)[1] - 1.0).abs() < 1e-15);
        assert_eq!(out.target(), m(&[1.0, std::f64::consts::E]).target());
    }

    #[test]
    fn nonpositive_value_names_row_and_column() {
        let err = log_transform(&m(&[2.0, 0.0]), &["x".to_string()]).unwrap_err();
        assert!(matches!(err, Error::Cell { row: 2, ref column, .. } if column == "x"));
        let err = log_target(&m(&[2.0, -1.0, 3.0])).unwrap_err();
        assert!(matches!(err, Error::Cell { row: 2, ref column, .. } if column == "y"));
    }
}
