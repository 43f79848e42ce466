use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A column-named numeric table plus a target vector.
///
/// This is the unit of exchange between every pipeline stage. Construction
/// checks that shapes agree, names are unique and every value is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    column_names: Vec<String>,
    values: DMatrix<f64>,
    target: DVector<f64>,
    target_name: String,
}

impl FeatureMatrix {
    pub fn new(
        column_names: Vec<String>,
        values: DMatrix<f64>,
        target: DVector<f64>,
        target_name: impl Into<String>,
    ) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(Error::Empty("feature matrix has no samples".into()));
        }
        if column_names.len() != values.ncols() {
            return Err(Error::DimensionMismatch {
                expected: values.ncols(),
                actual: column_names.len(),
            });
        }
        if target.len() != values.nrows() {
            return Err(Error::DimensionMismatch {
                expected: values.nrows(),
                actual: target.len(),
            });
        }
        let mut seen = HashSet::new();
        for name in &column_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        for (j, name) in column_names.iter().enumerate() {
            if let Some(i) = values.column(j).iter().position(|v| !v.is_finite()) {
                return Err(Error::Cell {
                    row: i + 1,
                    column: name.clone(),
                    message: "non-finite value".into(),
                });
            }
        }
        let target_name = target_name.into();
        if let Some(i) = target.iter().position(|v| !v.is_finite()) {
            return Err(Error::Cell {
                row: i + 1,
                column: target_name,
                message: "non-finite value".into(),
            });
        }
        Ok(Self {
            column_names,
            values,
            target,
            target_name,
        })
    }

    /// Build from row-major feature rows.
    pub fn from_rows(
        column_names: Vec<String>,
        rows: &[Vec<f64>],
        target: Vec<f64>,
        target_name: impl Into<String>,
    ) -> Result<Self> {
        let ncols = column_names.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch {
                expected: ncols,
                actual: bad.len(),
            });
        }
        let values = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
        Self::new(column_names, values, DVector::from_vec(target), target_name)
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn require_column(&self, name: &str) -> Result<usize> {
        self.column_index(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    /// Keep the given columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&j| j >= self.n_features()) {
            return Err(Error::InvalidArgument(format!(
                "column index {bad} out of range for {} features",
                self.n_features()
            )));
        }
        let names = indices
            .iter()
            .map(|&j| self.column_names[j].clone())
            .collect();
        let values = self.values.select_columns(indices);
        Self::new(names, values, self.target.clone(), self.target_name.clone())
    }

    pub fn select_named(&self, names: &[String]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| self.require_column(n))
            .collect::<Result<Vec<_>>>()?;
        self.select_columns(&idx)
    }

    /// Keep the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n_samples()) {
            return Err(Error::InvalidArgument(format!(
                "row index {bad} out of range for {} samples",
                self.n_samples()
            )));
        }
        let values = self.values.select_rows(indices);
        let target = DVector::from_iterator(indices.len(), indices.iter().map(|&i| self.target[i]));
        Self::new(
            self.column_names.clone(),
            values,
            target,
            self.target_name.clone(),
        )
    }

    /// Append a column at the right edge.
    pub fn with_column(&self, name: impl Into<String>, column: Vec<f64>) -> Result<Self> {
        if column.len() != self.n_samples() {
            return Err(Error::DimensionMismatch {
                expected: self.n_samples(),
                actual: column.len(),
            });
        }
        let mut names = self.column_names.clone();
        names.push(name.into());
        let n = self.n_samples();
        let f = self.n_features();
        let values = DMatrix::from_fn(n, f + 1, |i, j| {
            if j < f {
                self.values[(i, j)]
            } else {
                column[i]
            }
        });
        Self::new(names, values, self.target.clone(), self.target_name.clone())
    }

    pub fn with_values(&self, values: DMatrix<f64>) -> Result<Self> {
        Self::new(
            self.column_names.clone(),
            values,
            self.target.clone(),
            self.target_name.clone(),
        )
    }

    pub fn with_target(&self, target: DVector<f64>) -> Result<Self> {
        Self::new(
            self.column_names.clone(),
            self.values.clone(),
            target,
            self.target_name.clone(),
        )
    }
}
