//! Pearson correlation diagnostics.

use nalgebra::DMatrix;

use super::FeatureMatrix;
use crate::error::{Error, Result, ResultExt};

/// Sample Pearson correlation coefficient (two-pass, n−1 convention).
///
/// Fails for length mismatch, fewer than two values, or a constant input.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "correlation needs at least two values".into(),
        ));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ConstantColumn("x".into()));
    }
    if syy == 0.0 {
        return Err(Error::ConstantColumn("y".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub names: Vec<String>,
    pub target_name: String,
    /// Feature-by-feature coefficients; symmetric with unit diagonal.
    pub matrix: DMatrix<f64>,
    pub target_correlations: Vec<f64>,
}

fn rename_constant(e: Error, name: &str) -> Error {
    match e {
        Error::ConstantColumn(_) => Error::ConstantColumn(name.to_string()),
        other => other,
    }
}

pub fn correlation_report(m: &FeatureMatrix) -> Result<CorrelationReport> {
    let f = m.n_features();
    let cols: Vec<Vec<f64>> = (0..f).map(|j| m.column(j)).collect();
    let target: Vec<f64> = m.target().iter().copied().collect();
    let names = m.column_names();

    let mut matrix = DMatrix::from_element(f, f, 1.0);
    for i in 0..f {
        for j in (i + 1)..f {
            let r = pearson(&cols[i], &cols[j])
                .map_err(|e| {
                    let culprit = if matches!(e, Error::ConstantColumn(ref c) if c == "y") {
                        &names[j]
                    } else {
                        &names[i]
                    };
                    rename_constant(e, culprit)
                })
                .with_context(|| format!("correlating `{}` with `{}`", names[i], names[j]))?;
            matrix[(i, j)] = r;
            matrix[(j, i)] = r;
        }
    }
    let target_correlations = cols
        .iter()
        .zip(names)
        .map(|(c, name)| {
            pearson(c, &target)
                .map_err(|e| {
                    let culprit = if matches!(e, Error::ConstantColumn(ref c) if c == "y") {
                        m.target_name()
                    } else {
                        name
                    };
                    rename_constant(e, culprit)
                })
                .with_context(|| format!("correlating `{name}` with the target"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationReport {
        names: names.to_vec(),
        target_name: m.target_name().to_string(),
        matrix,
        target_correlations,
    })
}

impl CorrelationReport {
    /// CSV with one row per feature: `feature,<features...>,<target>`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push(',');
        out.push_str(&self.target_name);
        out.push('\n');
        for (i, n) in self.names.iter().enumerate() {
            out.push_str(n);
            for j in 0..self.names.len() {
                out.push_str(&format!(",{}", self.matrix[(i, j)]));
            }
            out.push_str(&format!(",{}\n", self.target_correlations[i]));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_evaluated_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        // deviations (-1.5,-0.5,0.5,1.5) and (-1.5,0.5,-0.5,1.5): sxy = 4, sxx = syy = 5
        let r = pearson(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-15);
    }

    #[test]
    fn constant_input_is_an_error() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::ConstantColumn(_))
        ));
        assert!(pearson(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn report_names_constant_column() {
        let m = FeatureMatrix::from_rows(
            vec!["a".into(), "flat".into()],
            &[vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]],
            vec![1.0, 0.0, 2.0],
            "y",
        )
        .unwrap();
        let err = correlation_report(&m).unwrap_err();
        assert!(matches!(err.root(), Error::ConstantColumn(c) if c == "flat"));
    }

    #[test]
    fn duplicated_column_correlates_perfectly() {
        let m = FeatureMatrix::from_rows(
            vec!["a".into(), "a2".into()],
            &[vec![1.0, 1.0], vec![2.0, 2.0], vec![4.0, 4.0]],
            vec![1.0, 0.0, 2.0],
            "y",
        )
        .unwrap();
        let rep = correlation_report(&m).unwrap();
        assert_eq!(rep.matrix[(0, 1)], 1.0);
        assert_eq!(rep.matrix[(0, 0)], 1.0);
        assert_eq!(rep.matrix.shape(), (2, 2));
    }
}
