//! Single-hidden-layer perceptron: `tanh` hidden units, identity output,
//! mean-squared-error loss, full-batch gradient descent.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::Predictor;
use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::preprocess::mean_std;
use crate::rng::{rng_from_seed, Rng};

pub const MIN_HIDDEN: usize = 5;
pub const MAX_HIDDEN: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Epochs without validation improvement before stopping; 0 disables
    /// early stopping and trains on every row.
    pub patience: usize,
    /// Share of the training rows held back for early stopping.
    pub validation_fraction: f64,
    /// Fit the network to a standardised target and map predictions back.
    pub standardize_target: bool,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_size: 10,
            learning_rate: 0.01,
            epochs: 2000,
            patience: 50,
            validation_fraction: 0.15,
            standardize_target: true,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(MIN_HIDDEN..=MAX_HIDDEN).contains(&self.hidden_size) {
            return Err(Error::InvalidArgument(format!(
                "hidden size must be in [{MIN_HIDDEN}, {MAX_HIDDEN}], got {}",
                self.hidden_size
            )));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::InvalidArgument(format!(
                "validation fraction must be in [0, 1), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

/// Network weights. Hidden weights are row-major: `w_hidden[j * n_inputs + k]`
/// connects input `k` to hidden unit `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    n_inputs: usize,
    hidden_size: usize,
    w_hidden: Vec<f64>,
    b_hidden: Vec<f64>,
    w_out: Vec<f64>,
    b_out: f64,
    /// Predictions are `network(x) * target_scale + target_offset`.
    target_offset: f64,
    target_scale: f64,
}

#[derive(Debug, Clone)]
pub struct MlpFit {
    pub model: MlpModel,
    /// MSE over every row handed to `fit_mlp`, in target units.
    pub train_mse: f64,
    pub epochs_run: usize,
    /// Loss on the gradient rows at the start of each epoch (network units).
    pub loss_history: Vec<f64>,
}

/// Row-major copy of a feature block for the inner loops.
struct Rows<'a> {
    data: &'a [f64],
    d: usize,
}

impl Rows<'_> {
    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }
}

impl MlpModel {
    pub fn zeros(n_inputs: usize, hidden_size: usize) -> Self {
        Self {
            n_inputs,
            hidden_size,
            w_hidden: vec![0.0; n_inputs * hidden_size],
            b_hidden: vec![0.0; hidden_size],
            w_out: vec![0.0; hidden_size],
            b_out: 0.0,
            target_offset: 0.0,
            target_scale: 1.0,
        }
    }

    /// Weights uniform in `±1/√fan_in` for each layer, biases zero.
    pub fn random(n_inputs: usize, hidden_size: usize, rng: &mut Rng) -> Self {
        let mut m = Self::zeros(n_inputs, hidden_size);
        let a = 1.0 / (n_inputs.max(1) as f64).sqrt();
        for w in &mut m.w_hidden {
            *w = rng.random_range(-a..=a);
        }
        let b = 1.0 / (hidden_size as f64).sqrt();
        for w in &mut m.w_out {
            *w = rng.random_range(-b..=b);
        }
        m
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    pub fn n_parameters(&self) -> usize {
        self.w_hidden.len() + self.b_hidden.len() + self.w_out.len() + 1
    }

    /// Flattened as `w_hidden, b_hidden, w_out, b_out`.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_parameters());
        p.extend(&self.w_hidden);
        p.extend(&self.b_hidden);
        p.extend(&self.w_out);
        p.push(self.b_out);
        p
    }

    pub fn set_parameters(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.n_parameters() {
            return Err(Error::DimensionMismatch {
                expected: self.n_parameters(),
                actual: p.len(),
            });
        }
        let (wh, rest) = p.split_at(self.w_hidden.len());
        let (bh, rest) = rest.split_at(self.hidden_size);
        let (wo, bo) = rest.split_at(self.hidden_size);
        self.w_hidden.copy_from_slice(wh);
        self.b_hidden.copy_from_slice(bh);
        self.w_out.copy_from_slice(wo);
        self.b_out = bo[0];
        Ok(())
    }

    pub fn output_bias(&self) -> f64 {
        self.b_out
    }

    pub fn set_output_bias(&mut self, b: f64) {
        self.b_out = b;
    }

    fn forward_into(&self, x: &[f64], hidden: &mut [f64]) -> f64 {
        let d = self.n_inputs;
        let mut out = self.b_out;
        for j in 0..self.hidden_size {
            let w = &self.w_hidden[j * d..(j + 1) * d];
            let mut z = self.b_hidden[j];
            for k in 0..d {
                z += w[k] * x[k];
            }
            let h = z.tanh();
            hidden[j] = h;
            out += self.w_out[j] * h;
        }
        out
    }

    /// Raw network output, before the target scale is undone.
    pub fn network_output(&self, x: &[f64]) -> f64 {
        let mut hidden = vec![0.0; self.hidden_size];
        self.forward_into(x, &mut hidden)
    }

    fn mse_rows(&self, rows: &Rows, y: &[f64], idx: &[usize], hidden: &mut [f64]) -> f64 {
        let mut s = 0.0;
        for &i in idx {
            let e = self.forward_into(rows.row(i), hidden) - y[i];
            s += e * e;
        }
        s / idx.len() as f64
    }

    /// Loss and gradient over `idx`, gradient written into `grad` (same
    /// layout as [`MlpModel::parameters`]).
    fn loss_grad_rows(
        &self,
        rows: &Rows,
        y: &[f64],
        idx: &[usize],
        hidden: &mut [f64],
        grad: &mut [f64],
    ) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let d = self.n_inputs;
        let h = self.hidden_size;
        let (g_wh, rest) = grad.split_at_mut(d * h);
        let (g_bh, rest) = rest.split_at_mut(h);
        let (g_wo, g_bo) = rest.split_at_mut(h);
        let scale = 2.0 / idx.len() as f64;
        let mut loss = 0.0;
        for &i in idx {
            let x = rows.row(i);
            let e = self.forward_into(x, hidden) - y[i];
            loss += e * e;
            let r = scale * e;
            g_bo[0] += r;
            for j in 0..h {
                g_wo[j] += r * hidden[j];
                let delta = r * self.w_out[j] * (1.0 - hidden[j] * hidden[j]);
                g_bh[j] += delta;
                let gw = &mut g_wh[j * d..(j + 1) * d];
                for k in 0..d {
                    gw[k] += delta * x[k];
                }
            }
        }
        loss / idx.len() as f64
    }

    /// Mean squared error of the raw network output against `y`, and its
    /// gradient with respect to [`MlpModel::parameters`].
    pub fn loss_and_gradient(&self, x: &nalgebra::DMatrix<f64>, y: &[f64]) -> Result<(f64, Vec<f64>)> {
        if x.ncols() != self.n_inputs {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs,
                actual: x.ncols(),
            });
        }
        if x.nrows() != y.len() || y.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                actual: y.len(),
            });
        }
        let data = row_major(x);
        let rows = Rows {
            data: &data,
            d: self.n_inputs,
        };
        let idx: Vec<usize> = (0..y.len()).collect();
        let mut hidden = vec![0.0; self.hidden_size];
        let mut grad = vec![0.0; self.n_parameters()];
        let loss = self.loss_grad_rows(&rows, y, &idx, &mut hidden, &mut grad);
        Ok((loss, grad))
    }
}

fn row_major(x: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    let (n, d) = x.shape();
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        for k in 0..d {
            data.push(x[(i, k)]);
        }
    }
    data
}

/// Train one network.
///
/// Inputs are expected to be standardised; this is not checked. When early
/// stopping is on, a shard of `validation_fraction` of the rows (at least
/// one) is held back, the weights with the lowest shard loss are kept, and
/// training stops after `patience` epochs without improvement.
pub fn fit_mlp(m: &FeatureMatrix, config: &MlpConfig, seed: u64) -> Result<MlpFit> {
    config.validate()?;
    let n = m.n_samples();
    if n == 0 {
        return Err(Error::Empty("no training rows".into()));
    }
    let mut rng = rng_from_seed(seed);
    let d = m.n_features();
    let data = row_major(m.values());
    let rows = Rows { data: &data, d };
    let y_raw: Vec<f64> = m.target().iter().copied().collect();

    let (offset, scale) = if config.standardize_target && n >= 2 {
        let (mu, sd) = mean_std(&y_raw);
        (mu, if sd > 0.0 { sd } else { 1.0 })
    } else {
        (0.0, 1.0)
    };
    let y: Vec<f64> = y_raw.iter().map(|v| (v - offset) / scale).collect();

    let mut model = MlpModel::random(d, config.hidden_size, &mut rng);
    model.target_offset = offset;
    model.target_scale = scale;

    let mut order: Vec<usize> = (0..n).collect();
    let n_val = if config.patience > 0 && config.validation_fraction > 0.0 {
        ((config.validation_fraction * n as f64).round() as usize).max(1)
    } else {
        0
    };
    let early_stopping = n_val > 0 && n_val < n;
    let (val_idx, fit_idx) = if early_stopping {
        order.shuffle(&mut rng);
        let (v, f) = order.split_at(n_val);
        (v.to_vec(), f.to_vec())
    } else {
        (Vec::new(), order)
    };

    let mut params = model.parameters();
    let mut grad = vec![0.0; params.len()];
    let mut hidden = vec![0.0; config.hidden_size];
    let mut history = Vec::with_capacity(config.epochs);
    let mut best = (f64::INFINITY, params.clone());
    let mut stale = 0usize;
    let mut epochs_run = 0;

    for epoch in 0..config.epochs {
        let loss = model.loss_grad_rows(&rows, &y, &fit_idx, &mut hidden, &mut grad);
        if !loss.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite training loss at epoch {epoch}"
            )));
        }
        history.push(loss);
        epochs_run = epoch + 1;
        if early_stopping {
            let val = model.mse_rows(&rows, &y, &val_idx, &mut hidden);
            if val < best.0 {
                best = (val, params.clone());
                stale = 0;
            } else {
                stale += 1;
                if stale >= config.patience {
                    break;
                }
            }
        }
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= config.learning_rate * g;
        }
        model.set_parameters(&params)?;
    }
    if early_stopping && best.0.is_finite() {
        model.set_parameters(&best.1)?;
    }
    if model.parameters().iter().any(|p| !p.is_finite()) {
        return Err(Error::Numerical("training produced non-finite weights".into()));
    }

    let all: Vec<usize> = (0..n).collect();
    let train_mse = model.mse_rows(&rows, &y, &all, &mut hidden) * scale * scale;
    Ok(MlpFit {
        model,
        train_mse,
        epochs_run,
        loss_history: history,
    })
}

impl Predictor for MlpModel {
    fn n_features(&self) -> usize {
        self.n_inputs
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        self.network_output(x) * self.target_scale + self.target_offset
    }
}
