//! Per-input feature vectors for the conditional density model.
//!
//! Each input is summarised by its log-energy along the leading principal
//! directions of the pooled validation covariance, `ln(v_kᵀ C_i v_k)` for the
//! top `d` pooled eigenvectors `v_k`, and every coordinate is then whitened
//! (zero mean, unit variance) across the validation set.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::{SampleMatrix, SpectralDecomposition};

pub const DEFAULT_FEATURE_DIM: usize = 16;
const ENERGY_FLOOR: f64 = 1e-300;
const STD_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Number of pooled principal directions `d` (capped at `p`).
    pub dim: usize,
    /// Remove each input's column means before measuring energy.
    pub center: bool,
    /// Patch side used when inputs are images.
    pub patch_side: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { dim: DEFAULT_FEATURE_DIM, center: true, patch_side: crate::spectral::DEFAULT_PATCH_SIDE }
    }
}

/// Raw (unwhitened) log-energies, one row per input.
pub fn log_energies(
    inputs: &[SampleMatrix],
    pooled: &SpectralDecomposition,
    config: &FeatureConfig,
) -> Result<Mat<f64>> {
    let p = pooled.dim();
    let d = config.dim.min(p);
    if d == 0 {
        return Err(Error::Domain("feature dimension must be >= 1".into()));
    }
    let basis = pooled.eigenvectors.as_ref().subcols(0, d);
    let mut out = Mat::<f64>::zeros(inputs.len(), d);
    for (i, input) in inputs.iter().enumerate() {
        if input.ncols() != p {
            return Err(Error::DimensionMismatch { expected: p, found: input.ncols() });
        }
        let x = if config.center && !input.is_centered() {
            input.centered().into_data()
        } else {
            input.data().to_owned()
        };
        let coords = &x * basis;
        let n = x.nrows() as f64;
        for k in 0..d {
            let energy = (0..coords.nrows()).map(|r| coords[(r, k)].powi(2)).sum::<f64>() / n;
            out[(i, k)] = energy.max(ENERGY_FLOOR).ln();
        }
    }
    Ok(out)
}

/// Column-wise standardisation; constant columns become zero.
pub fn whiten_columns(m: &Mat<f64>) -> Mat<f64> {
    let means = linalg::column_means(m.as_ref());
    let n = m.nrows() as f64;
    let stds: Vec<f64> = (0..m.ncols())
        .map(|k| ((0..m.nrows()).map(|i| (m[(i, k)] - means[k]).powi(2)).sum::<f64>() / n).sqrt())
        .collect();
    Mat::from_fn(m.nrows(), m.ncols(), |i, k| {
        if stds[k] > STD_FLOOR {
            (m[(i, k)] - means[k]) / stds[k]
        } else {
            0.0
        }
    })
}

/// Whitened log-energy features, `inputs.len() × min(d, p)`.
pub fn spectral_energy_features(
    inputs: &[SampleMatrix],
    pooled: &SpectralDecomposition,
    config: &FeatureConfig,
) -> Result<Mat<f64>> {
    Ok(whiten_columns(&log_energies(inputs, pooled, config)?))
}
