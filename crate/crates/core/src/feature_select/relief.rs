//! RReliefF: the regression form of ReliefF.
//!
//! For each sampled instance `R` and each of its `k` nearest neighbours `I`
//! (Manhattan distance over range-normalised attributes), with neighbour
//! influence `d(R, I)`:
//!
//! ```text
//! N_dC        += diff(τ, R, I) · d(R, I)
//! N_dA[A]     += diff(A, R, I) · d(R, I)
//! N_dC∧dA[A]  += diff(τ, R, I) · diff(A, R, I) · d(R, I)
//! ```
//!
//! and after `m` instances
//!
//! ```text
//! W[A] = N_dC∧dA[A] / N_dC − (N_dA[A] − N_dC∧dA[A]) / (m − N_dC)
//! ```
//!
//! `diff` is the absolute difference divided by the attribute's (or the
//! target's) observed range. Neighbour influence is `exp(−(rank/σ)²)`
//! normalised over the `k` neighbours, or uniform `1/k` without decay.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReliefParams {
    /// Nearest neighbours per sampled instance.
    pub neighbors: usize,
    /// Sampled instances; `None` uses every instance once.
    pub iterations: Option<usize>,
    /// Rank-decay σ of the neighbour influence; `None` weighs neighbours
    /// uniformly.
    pub decay: Option<f64>,
}

impl Default for ReliefParams {
    fn default() -> Self {
        Self {
            neighbors: 10,
            iterations: None,
            decay: Some(20.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeatures {
    pub names: Vec<String>,
    pub weights: Vec<f64>,
    /// Feature indices by descending weight; ties keep column order.
    pub order: Vec<usize>,
    pub params: ReliefParams,
}

impl RankedFeatures {
    /// `feature,weight,rank` with rank 1 for the best feature, rows in column
    /// order.
    pub fn to_csv(&self) -> String {
        let mut rank = vec![0usize; self.names.len()];
        for (r, &j) in self.order.iter().enumerate() {
            rank[j] = r + 1;
        }
        let mut out = String::from("feature,weight,rank\n");
        for (j, name) in self.names.iter().enumerate() {
            out.push_str(&format!("{name},{},{}\n", self.weights[j], rank[j]));
        }
        out
    }
}

/// Indices sorted by descending weight, ties broken by ascending index.
/// `NaN` sorts last.
pub fn rank_order(weights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (wa, wb) = (weights[a], weights[b]);
        match (wa.is_nan(), wb.is_nan()) {
            (true, true) => a.cmp(&b),
            (true, false) => std::cmp::Ordering::Greater,
            (false, true) => std::cmp::Ordering::Less,
            _ => wb.partial_cmp(&wa).unwrap().then(a.cmp(&b)),
        }
    });
    order
}

pub fn rrelieff(m: &FeatureMatrix, params: &ReliefParams, seed: u64) -> Result<RankedFeatures> {
    let y: Vec<f64> = m.target().iter().copied().collect();
    let weights = rrelieff_weights(m.values(), &y, m.column_names(), m.target_name(), params, seed)?;
    Ok(RankedFeatures {
        names: m.column_names().to_vec(),
        order: rank_order(&weights),
        weights,
        params: *params,
    })
}

fn min_max_range(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    hi - lo
}

/// RReliefF weights for the columns of `x` against `y`.
pub fn rrelieff_weights(
    x: &DMatrix<f64>,
    y: &[f64],
    names: &[String],
    target_name: &str,
    params: &ReliefParams,
    seed: u64,
) -> Result<Vec<f64>> {
    let (n, f) = x.shape();
    let k = params.neighbors;
    if k == 0 {
        return Err(Error::InvalidArgument("RReliefF needs at least one neighbour".into()));
    }
    if k >= n {
        return Err(Error::InvalidArgument(format!(
            "RReliefF with {k} neighbours needs more than {k} samples, got {n}"
        )));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    if let Some(s) = params.decay {
        if !(s > 0.0) {
            return Err(Error::InvalidArgument(format!("decay σ must be positive, got {s}")));
        }
    }

    let ranges: Vec<f64> = (0..f).map(|j| min_max_range(x.column(j).iter().copied())).collect();
    if let Some(j) = ranges.iter().position(|&r| !(r > 0.0)) {
        return Err(Error::ZeroRange(names.get(j).cloned().unwrap_or_else(|| j.to_string())));
    }
    let y_range = min_max_range(y.iter().copied());
    if !(y_range > 0.0) {
        return Err(Error::ZeroRange(target_name.to_string()));
    }

    // row-major, range-normalised copy
    let mut xn = vec![0.0; n * f];
    for i in 0..n {
        for j in 0..f {
            xn[i * f + j] = x[(i, j)] / ranges[j];
        }
    }
    let yn: Vec<f64> = y.iter().map(|v| v / y_range).collect();

    let m_used = params.iterations.unwrap_or(n);
    if m_used == 0 {
        return Err(Error::InvalidArgument("RReliefF needs at least one iteration".into()));
    }
    let instances: Vec<usize> = if m_used == n {
        (0..n).collect()
    } else {
        let mut rng = rng_from_seed(seed);
        if m_used < n {
            sample(&mut rng, n, m_used).into_vec()
        } else {
            (0..m_used).map(|_| rng.random_range(0..n)).collect()
        }
    };

    let influence: Vec<f64> = match params.decay {
        Some(sigma) => {
            let raw: Vec<f64> = (1..=k).map(|r| (-(r as f64 / sigma).powi(2)).exp()).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / total).collect()
        }
        None => vec![1.0 / k as f64; k],
    };

    let mut n_dc = 0.0;
    let mut n_da = vec![0.0; f];
    let mut n_dc_da = vec![0.0; f];
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n);
    for &i in &instances {
        let ri = &xn[i * f..(i + 1) * f];
        dist.clear();
        for j in (0..n).filter(|&j| j != i) {
            let rj = &xn[j * f..(j + 1) * f];
            let d: f64 = ri.iter().zip(rj).map(|(a, b)| (a - b).abs()).sum();
            dist.push((d, j));
        }
        dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        for (&(_, j), &w) in dist.iter().take(k).zip(&influence) {
            let rj = &xn[j * f..(j + 1) * f];
            let dt = (yn[i] - yn[j]).abs();
            n_dc += dt * w;
            for a in 0..f {
                let da = (ri[a] - rj[a]).abs();
                n_da[a] += da * w;
                n_dc_da[a] += dt * da * w;
            }
        }
    }

    let m = instances.len() as f64;
    if !(n_dc > 0.0) || !(m - n_dc > 0.0) {
        return Err(Error::Numerical(format!(
            "RReliefF is degenerate: target-difference mass {n_dc} over {m} instances"
        )));
    }
    Ok((0..f)
        .map(|a| n_dc_da[a] / n_dc - (n_da[a] - n_dc_da[a]) / (m - n_dc))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranking_breaks_ties_by_index() {
        assert_eq!(rank_order(&[0.1, 0.3, 0.3, -0.2]), vec![1, 2, 0, 3]);
        assert_eq!(rank_order(&[f64::NAN, 0.0]), vec![1, 0]);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let m = FeatureMatrix::from_rows(
            vec!["a".into(), "flat".into()],
            &[vec![1.0, 2.0], vec![2.0, 2.0], vec![3.0, 2.0]],
            vec![1.0, 2.0, 3.0],
            "y",
        )
        .unwrap();
        let p = ReliefParams {
            neighbors: 1,
            ..Default::default()
        };
        assert!(matches!(rrelieff(&m, &p, 0), Err(Error::ZeroRange(c)) if c == "flat"));
        let big_k = ReliefParams {
            neighbors: 3,
            ..Default::default()
        };
        assert!(rrelieff(&m.select_columns(&[0]).unwrap(), &big_k, 0).is_err());
    }

    #[test]
    fn csv_ranks() {
        let r = RankedFeatures {
            names: vec!["a".into(), "b".into()],
            weights: vec![-0.5, 0.25],
            order: vec![1, 0],
            params: ReliefParams::default(),
        };
        assert_eq!(r.to_csv(), "feature,weight,rank\na,-0.5,2\nb,0.25,1\n");
    }
}
