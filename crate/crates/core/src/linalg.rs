//! Small dense linear-algebra helpers shared by the least-squares code.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance below which a column is treated as linearly dependent.
pub const RANK_TOL: f64 = 1e-9;

/// Prepend a column of ones.
pub fn with_intercept(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut out = DMatrix::from_element(n, x.ncols() + 1, 1.0);
    out.columns_mut(1, x.ncols()).copy_from(x);
    out
}

/// Indices of a maximal linearly independent subset of the columns of `x`,
/// scanned left to right. With `intercept`, the all-ones vector is treated as
/// already present, so constant columns are dropped too.
///
/// Uses modified Gram-Schmidt with one reorthogonalisation pass.
pub fn independent_columns(x: &DMatrix<f64>, intercept: bool) -> Vec<usize> {
    let n = x.nrows();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    if intercept && n > 0 {
        basis.push(DVector::from_element(n, 1.0 / (n as f64).sqrt()));
    }
    let mut keep = Vec::new();
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        let norm0 = col.norm();
        if norm0 == 0.0 || !norm0.is_finite() {
            continue;
        }
        let mut r = col;
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&r);
                r.axpy(-proj, q, 1.0);
            }
        }
        let norm = r.norm();
        if norm > RANK_TOL * norm0 {
            basis.push(r / norm);
            keep.push(j);
        }
    }
    keep
}

/// Least-squares solution of `a * beta ≈ b` through a Householder QR.
///
/// Fails when `a` is numerically rank deficient.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, p) = a.shape();
    if n < p {
        return Err(Error::RankDeficient(format!(
            "{n} rows cannot determine {p} coefficients"
        )));
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let scale = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    for i in 0..p {
        if !(r[(i, i)].abs() > RANK_TOL * scale) {
            return Err(Error::RankDeficient(format!(
                "column {i} is (numerically) a combination of earlier columns"
            )));
        }
    }
    let qtb = qr.q().transpose() * b;
    r.solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))
}

/// Thin orthonormal basis `Q` of the column space of a full-rank `a`.
pub fn orthonormal_basis(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = a.ncols();
    let qr = a.clone().qr();
    let r = qr.r();
    let scale = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    for i in 0..p {
        if !(r[(i, i)].abs() > RANK_TOL * scale) {
            return Err(Error::RankDeficient(format!(
                "column {i} is (numerically) a combination of earlier columns"
            )));
        }
    }
    Ok(qr.q())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_dependent_and_constant_columns() {
        let x = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 2.0, 1.5, 7.0, //
                2.0, 1.0, 1.5, 7.0, //
                3.0, 5.0, 4.0, 7.0, //
                4.0, 3.0, 3.5, 7.0,
            ],
        );
        // col 2 = (col0 + col1) / 2, col 3 constant
        assert_eq!(independent_columns(&x, true), vec![0, 1]);
        assert_eq!(independent_columns(&x, false), vec![0, 1, 3]);
    }

    #[test]
    fn lstsq_recovers_exact_solution() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let b = DVector::from_vec(vec![1.0, 3.0, 5.0]);
        let beta = lstsq(&a, &b).unwrap();
        assert!((beta[0] - 1.0).abs() < 1e-12);
        assert!((beta[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lstsq_rejects_rank_deficiency() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(matches!(lstsq(&a, &b), Err(Error::RankDeficient(_))));
    }
}
