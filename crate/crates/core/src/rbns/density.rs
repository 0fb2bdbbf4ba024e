//! Conditional diagonal-Gaussian density of feature vectors given a scalar.
//!
//! A one-hidden-layer tanh perceptron maps the projection `u` to a mean and
//! a log-variance per feature dimension. It is trained by full-batch
//! gradient descent on the Gaussian negative log-likelihood. The projection
//! is standardised on the training set first, so a direction's score does
//! not depend on where its overlaps happen to sit.

use std::f64::consts::PI;

use faer::{Mat, MatRef};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub const LOGVAR_MIN: f64 = -10.0;
pub const LOGVAR_MAX: f64 = 10.0;
/// Floor applied to empirical per-dimension variances.
pub const VARIANCE_FLOOR: f64 = 1e-8;
/// Fewest samples a density can be trained on.
pub const MIN_TRAINING_SAMPLES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub hidden_width: usize,
    pub epochs: usize,
    pub step_size: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self { hidden_width: 16, epochs: 200, step_size: 0.01, seed: 0 }
    }
}

/// Trained conditional density `Q(z | u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimator {
    /// Input-to-hidden weights and biases, length `hidden_width`.
    w_in: Vec<f64>,
    b_in: Vec<f64>,
    /// Hidden-to-output weights, `2d × hidden_width`: rows `0..d` produce the
    /// means, rows `d..2d` the log-variances.
    w_out: Mat<f64>,
    b_out: Vec<f64>,
    /// The network sees `(u − u_shift) / u_scale`, standardised on the training set.
    u_shift: f64,
    u_scale: f64,
    dim: usize,
    pub config: TrainingConfig,
    /// Mean training NLL (nats per sample) before each epoch's update, plus the final value.
    pub loss_history: Vec<f64>,
}

/// Mean and log-variance of `Q(z | u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrediction {
    pub mean: Vec<f64>,
    pub log_var: Vec<f64>,
}

struct Forward {
    hidden: Vec<f64>,
    raw: Vec<f64>,
}

impl DensityEstimator {
    fn init(dim: usize, config: TrainingConfig, projections: &[f64]) -> Self {
        let h = config.hidden_width;
        let n = projections.len() as f64;
        let u_shift = projections.iter().sum::<f64>() / n;
        let sd = (projections.iter().map(|u| (u - u_shift).powi(2)).sum::<f64>() / n).sqrt();
        let u_scale = if sd > 1e-12 { sd } else { 1.0 };
        let mut rng = rng_from_seed(config.seed);
        // Glorot-normal scales.
        let s_in = (2.0 / (1.0 + h as f64)).sqrt();
        let s_out = (2.0 / (h as f64 + 2.0 * dim as f64)).sqrt();
        let w_in = (0..h).map(|_| s_in * rng.sample::<f64, _>(StandardNormal)).collect();
        let w_out = Mat::from_fn(2 * dim, h, |_, _| s_out * rng.sample::<f64, _>(StandardNormal));
        Self {
            w_in,
            b_in: vec![0.0; h],
            w_out,
            b_out: vec![0.0; 2 * dim],
            u_shift,
            u_scale,
            dim,
            config,
            loss_history: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn standardise(&self, u: f64) -> f64 {
        (u - self.u_shift) / self.u_scale
    }

    /// Network pass on an already standardised input.
    fn forward(&self, z: f64) -> Forward {
        let hidden: Vec<f64> =
            self.w_in.iter().zip(&self.b_in).map(|(w, b)| (w * z + b).tanh()).collect();
        let raw = (0..2 * self.dim)
            .map(|r| {
                self.b_out[r]
                    + hidden.iter().enumerate().map(|(k, hk)| self.w_out[(r, k)] * hk).sum::<f64>()
            })
            .collect();
        Forward { hidden, raw }
    }

    /// Log-variances are clamped to `[LOGVAR_MIN, LOGVAR_MAX]`.
    pub fn predict(&self, u: f64) -> GaussianPrediction {
        let f = self.forward(self.standardise(u));
        GaussianPrediction {
            mean: f.raw[..self.dim].to_vec(),
            log_var: f.raw[self.dim..].iter().map(|v| v.clamp(LOGVAR_MIN, LOGVAR_MAX)).collect(),
        }
    }

    /// Mean negative log-likelihood in nats per sample.
    pub fn nll(&self, projections: &[f64], features: MatRef<'_, f64>) -> Result<f64> {
        check_shapes(projections, features)?;
        if features.ncols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: features.ncols() });
        }
        let n = projections.len();
        let total: f64 = (0..n)
            .map(|i| {
                let pred = self.predict(projections[i]);
                (0..self.dim)
                    .map(|k| {
                        let r = features[(i, k)] - pred.mean[k];
                        0.5 * ((2.0 * PI).ln() + pred.log_var[k] + r * r * (-pred.log_var[k]).exp())
                    })
                    .sum::<f64>()
            })
            .sum();
        Ok(total / n as f64)
    }

    /// One full-batch gradient step; returns the loss at the pre-step parameters.
    fn step(&mut self, projections: &[f64], features: MatRef<'_, f64>) -> f64 {
        let (n, d, h) = (projections.len(), self.dim, self.config.hidden_width);
        let mut g_w_in = vec![0.0; h];
        let mut g_b_in = vec![0.0; h];
        let mut g_w_out = Mat::<f64>::zeros(2 * d, h);
        let mut g_b_out = vec![0.0; 2 * d];
        let mut loss = 0.0;
        let mut d_out = vec![0.0; 2 * d];
        for (i, &u) in projections.iter().enumerate() {
            let z = self.standardise(u);
            let f = self.forward(z);
            for k in 0..d {
                let raw_lv = f.raw[d + k];
                let lv = raw_lv.clamp(LOGVAR_MIN, LOGVAR_MAX);
                let prec = (-lv).exp();
                let r = features[(i, k)] - f.raw[k];
                loss += 0.5 * ((2.0 * PI).ln() + lv + r * r * prec);
                d_out[k] = -r * prec;
                d_out[d + k] = if (LOGVAR_MIN..=LOGVAR_MAX).contains(&raw_lv) {
                    0.5 - 0.5 * r * r * prec
                } else {
                    0.0
                };
            }
            for (r, &dr) in d_out.iter().enumerate() {
                g_b_out[r] += dr;
                for (k, &hk) in f.hidden.iter().enumerate() {
                    g_w_out[(r, k)] += dr * hk;
                }
            }
            for (k, &hk) in f.hidden.iter().enumerate() {
                let dh: f64 = d_out.iter().enumerate().map(|(r, dr)| dr * self.w_out[(r, k)]).sum();
                let dpre = dh * (1.0 - hk * hk);
                g_w_in[k] += dpre * z;
                g_b_in[k] += dpre;
            }
        }
        let lr = self.config.step_size / n as f64;
        for k in 0..h {
            self.w_in[k] -= lr * g_w_in[k];
            self.b_in[k] -= lr * g_b_in[k];
        }
        for r in 0..2 * d {
            self.b_out[r] -= lr * g_b_out[r];
            for k in 0..h {
                self.w_out[(r, k)] -= lr * g_w_out[(r, k)];
            }
        }
        loss / n as f64
    }
}

fn check_shapes(projections: &[f64], features: MatRef<'_, f64>) -> Result<()> {
    if projections.len() != features.nrows() {
        return Err(Error::DimensionMismatch { expected: projections.len(), found: features.nrows() });
    }
    if features.ncols() == 0 {
        return Err(Error::Degenerate("feature dimension must be >= 1".into()));
    }
    Ok(())
}

/// Fits `Q(z | u)` to `(projections[i], features row i)` pairs.
pub fn train_density(
    projections: &[f64],
    features: MatRef<'_, f64>,
    config: TrainingConfig,
) -> Result<DensityEstimator> {
    check_shapes(projections, features)?;
    if projections.len() < MIN_TRAINING_SAMPLES {
        return Err(Error::Degenerate(format!(
            "density training needs at least {MIN_TRAINING_SAMPLES} samples, got {}",
            projections.len()
        )));
    }
    if config.hidden_width == 0 || !(config.step_size > 0.0) {
        return Err(Error::Domain("hidden width and step size must be positive".into()));
    }
    let mut est = DensityEstimator::init(features.ncols(), config, projections);
    est.loss_history.reserve(config.epochs + 1);
    for _ in 0..config.epochs {
        let loss = est.step(projections, features);
        est.loss_history.push(loss);
    }
    let last = est.nll(projections, features)?;
    est.loss_history.push(last);
    if !last.is_finite() {
        return Err(Error::Numeric(format!("density training diverged (loss {last})")));
    }
    Ok(est)
}

/// `KL(N(μp, vp) ‖ N(μq, vq))` in nats.
pub fn gaussian_kl(mean_p: f64, var_p: f64, mean_q: f64, var_q: f64) -> f64 {
    let diff = mean_p - mean_q;
    0.5 * ((var_q / var_p).ln() + (var_p + diff * diff) / var_q - 1.0)
}

/// Per-dimension mean and (population) variance, variance floored at [`VARIANCE_FLOOR`].
pub fn diagonal_moments(features: MatRef<'_, f64>) -> (Vec<f64>, Vec<f64>) {
    let n = features.nrows() as f64;
    let mut means = Vec::with_capacity(features.ncols());
    let mut vars = Vec::with_capacity(features.ncols());
    for k in 0..features.ncols() {
        let m = (0..features.nrows()).map(|i| features[(i, k)]).sum::<f64>() / n;
        let v = (0..features.nrows()).map(|i| (features[(i, k)] - m).powi(2)).sum::<f64>() / n;
        means.push(m);
        vars.push(v.max(VARIANCE_FLOOR));
    }
    (means, vars)
}

/// Average over held-out samples of `KL(P̂_z ‖ Q(z | u_i))`, where `P̂_z` is the
/// diagonal Gaussian fitted to the held-out features. Nats.
pub fn kl_performance(
    estimator: &DensityEstimator,
    held_out_projections: &[f64],
    held_out_features: MatRef<'_, f64>,
) -> Result<f64> {
    check_shapes(held_out_projections, held_out_features)?;
    if held_out_projections.len() < 2 {
        return Err(Error::Degenerate("held-out fold needs at least 2 samples".into()));
    }
    if held_out_features.ncols() != estimator.dim() {
        return Err(Error::DimensionMismatch {
            expected: estimator.dim(),
            found: held_out_features.ncols(),
        });
    }
    let (mp, vp) = diagonal_moments(held_out_features);
    let total: f64 = held_out_projections
        .iter()
        .map(|&u| {
            let q = estimator.predict(u);
            (0..estimator.dim())
                .map(|k| gaussian_kl(mp[k], vp[k], q.mean[k], q.log_var[k].exp()))
                .sum::<f64>()
        })
        .sum();
    Ok((total / held_out_projections.len() as f64).max(0.0))
}
