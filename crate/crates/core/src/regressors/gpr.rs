//! Exact Gaussian-process regression with a squared-exponential kernel
//! `k(x, x') = σ_f² exp(−‖x − x'‖² / (2ℓ²))` and a zero prior mean.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::Predictor;
use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_SAMPLES: usize = 5000;

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GprParams {
    /// σ_f²
    pub signal_variance: f64,
    /// ℓ
    pub length_scale: f64,
    /// σ_n²
    pub noise_variance: f64,
}

impl GprParams {
    pub fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        let d2: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
        self.signal_variance * (-d2 / (2.0 * self.length_scale * self.length_scale)).exp()
    }

    fn validate(&self) -> Result<()> {
        let ok = self.signal_variance > 0.0
            && self.length_scale > 0.0
            && self.noise_variance >= 0.0
            && self.signal_variance.is_finite()
            && self.length_scale.is_finite()
            && self.noise_variance.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "GPR needs σ_f² > 0, ℓ > 0, σ_n² ≥ 0; got {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GprModel {
    pub params: GprParams,
    train_x: DMatrix<f64>,
    /// Lower Cholesky factor of `K + (σ_n² + jitter) I`.
    chol: DMatrix<f64>,
    /// `(K + σ_n² I)⁻¹ y`
    alpha: DVector<f64>,
    /// Diagonal jitter that had to be added for the factorisation to succeed.
    pub jitter: f64,
}

pub fn fit_gpr(m: &FeatureMatrix, params: GprParams) -> Result<GprModel> {
    fit_gpr_capped(m, params, DEFAULT_MAX_SAMPLES)
}

/// Factorise `K + σ_n² I`. When the plain factorisation fails, diagonal jitter
/// starting at `1e-10 · tr(K)/n` is added and escalated tenfold up to
/// `1e-4 · tr(K)/n`.
pub fn fit_gpr_capped(m: &FeatureMatrix, params: GprParams, max_samples: usize) -> Result<GprModel> {
    params.validate()?;
    let n = m.n_samples();
    if n > max_samples {
        return Err(Error::InvalidArgument(format!(
            "exact GPR is capped at {max_samples} samples, got {n}"
        )));
    }
    let x = m.values().clone();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| m.row(i)).collect();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = params.kernel(&rows[i], &rows[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] += params.noise_variance;
    }
    let scale = k.trace() / n as f64;

    let mut jitter = 0.0;
    let chol = loop {
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::<f64, Dyn>::new(kj) {
            break c;
        }
        jitter = if jitter == 0.0 {
            JITTER_START * scale
        } else {
            jitter * 10.0
        };
        if jitter > JITTER_MAX * scale * (1.0 + 1e-9) {
            return Err(Error::Numerical(format!(
                "kernel matrix not positive definite even with jitter {:e} (mean diagonal {scale:e}); \
                 inputs are too close for length scale {}",
                JITTER_MAX * scale,
                params.length_scale
            )));
        }
    };
    if jitter > 0.0 {
        log::debug!("GPR factorisation needed jitter {jitter:e}");
    }
    let alpha = chol.solve(m.target());
    Ok(GprModel {
        params,
        train_x: x,
        chol: chol.l(),
        alpha,
        jitter,
    })
}

/// Posterior predictive mean and variance (noise included) at `x`.
pub fn predict_gpr(g: &GprModel, x: &[f64]) -> Result<(f64, f64)> {
    if x.len() != g.train_x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: g.train_x.ncols(),
            actual: x.len(),
        });
    }
    let n = g.train_x.nrows();
    let kstar = DVector::from_iterator(
        n,
        (0..n).map(|i| {
            let row: Vec<f64> = g.train_x.row(i).iter().copied().collect();
            g.params.kernel(&row, x)
        }),
    );
    let mean = kstar.dot(&g.alpha);
    let v = g
        .chol
        .solve_lower_triangular(&kstar)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let var = g.params.signal_variance + g.params.noise_variance - v.norm_squared();
    if var < 0.0 {
        if -var > 1e-8 {
            log::warn!("clamping negative GPR predictive variance {var:e} to zero");
        }
        return Ok((mean, 0.0));
    }
    Ok((mean, var))
}

impl GprModel {
    pub fn n_train(&self) -> usize {
        self.train_x.nrows()
    }
}

impl Predictor for GprModel {
    fn n_features(&self) -> usize {
        self.train_x.ncols()
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        let n = self.train_x.nrows();
        (0..n)
            .map(|i| {
                let d2: f64 = self
                    .train_x
                    .row(i)
                    .iter()
                    .zip(x)
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum();
                self.params.signal_variance
                    * (-d2 / (2.0 * self.params.length_scale * self.params.length_scale)).exp()
                    * self.alpha[i]
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> FeatureMatrix {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 * 0.7, (i as f64).sin()]).collect();
        let y = rows.iter().map(|r| r[0].cos() + r[1]).collect();
        FeatureMatrix::from_rows(vec!["a".into(), "b".into()], &rows, y, "y").unwrap()
    }

    const P: GprParams = GprParams {
        signal_variance: 1.5,
        length_scale: 0.9,
        noise_variance: 0.05,
    };

    #[test]
    fn kernel_diagonal_is_signal_variance() {
        assert_eq!(P.kernel(&[0.3, -2.0], &[0.3, -2.0]), 1.5);
    }

    #[test]
    fn noiseless_interpolation() {
        let m = data();
        let g = fit_gpr(
            &m,
            GprParams {
                noise_variance: 0.0,
                ..P
            },
        )
        .unwrap();
        for i in 0..m.n_samples() {
            let (mean, var) = predict_gpr(&g, &m.row(i)).unwrap();
            assert!((mean - m.target()[i]).abs() < 1e-6);
            assert!(var < 1e-6);
        }
    }

    #[test]
    fn far_query_reverts_to_prior() {
        let g = fit_gpr(&data(), P).unwrap();
        let (mean, var) = predict_gpr(&g, &[1e3, -1e3]).unwrap();
        assert!(mean.abs() < 1e-12);
        assert!((var - (1.5 + 0.05)).abs() < 1e-12);
    }

    #[test]
    fn posterior_contracts_at_training_point() {
        let m = data();
        let g = fit_gpr(&m, P).unwrap();
        let (_, var) = predict_gpr(&g, &m.row(2)).unwrap();
        assert!(var < P.signal_variance);
    }

    #[test]
    fn duplicate_inputs_without_noise_need_jitter() {
        let rows = vec![vec![0.0], vec![0.0], vec![1.0]];
        let m = FeatureMatrix::from_rows(vec!["x".into()], &rows, vec![1.0, 1.0, 2.0], "y").unwrap();
        let g = fit_gpr(
            &m,
            GprParams {
                signal_variance: 1.0,
                length_scale: 1.0,
                noise_variance: 0.0,
            },
        )
        .unwrap();
        assert!(g.jitter > 0.0);
    }

    #[test]
    fn invalid_inputs() {
        let bad = GprParams {
            length_scale: 0.0,
            ..P
        };
        assert!(fit_gpr(&data(), bad).is_err());
        assert!(fit_gpr_capped(&data(), P, 3).is_err());
        let g = fit_gpr(&data(), P).unwrap();
        assert!(matches!(
            predict_gpr(&g, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
