//! Monte-Carlo checks of the spectral laws, packaged as serializable reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::scaled_gram;
use crate::rmt::{
    mp_bulk_edges, normalized_wigner_eigenvalues, sample_spiked_dataset, sample_wigner, semicircle_moment,
    spiked_outlier_location,
};
use crate::spectral::symmetric_eigenvalues;

pub const HISTOGRAM_BINS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` ascending bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn of(values: &[f64], bins: usize) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if lo < hi { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|b| lo + width * b as f64).collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Self { edges, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeComparison {
    pub beta: f64,
    pub supercritical: bool,
    pub predicted: Option<f64>,
    /// Sample eigenvalue at the spike's rank.
    pub empirical: f64,
    pub relative_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prediction {
    Mp {
        lambda_minus: f64,
        lambda_plus: f64,
        empirical_min: f64,
        empirical_max: f64,
        relative_error_min: f64,
        relative_error_max: f64,
    },
    Wigner {
        edge: f64,
        empirical_min: f64,
        empirical_max: f64,
        moment2: f64,
        empirical_moment2: f64,
        moment4: f64,
        empirical_moment4: f64,
    },
    Spike {
        lambda_plus: f64,
        spikes: Vec<SpikeComparison>,
        /// Eigenvalues above `λ₊` beyond the supercritical spikes.
        extra_outliers: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub n: usize,
    pub p: usize,
    pub sigma2: f64,
    pub seed: u64,
    pub histogram: Histogram,
    pub prediction: Prediction,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn sample_covariance_eigenvalues(n: usize, p: usize, spikes: &[f64], sigma2: f64, seed: u64) -> Result<(Vec<f64>, f64)> {
    let ds = sample_spiked_dataset(n, p, spikes, sigma2, seed)?;
    let cov = scaled_gram(ds.data.as_ref(), 1.0 / n as f64);
    Ok((symmetric_eigenvalues(cov.as_ref())?, p as f64 / n as f64))
}

/// Pure-noise sample covariance against the MP edges.
pub fn simulate_mp(n: usize, p: usize, sigma2: f64, seed: u64) -> Result<SimulationReport> {
    let (eigs, c) = sample_covariance_eigenvalues(n, p, &[], sigma2, seed)?;
    let model = mp_bulk_edges(sigma2, c)?;
    // With p > n the trailing p − n eigenvalues are structural zeros.
    let bulk = &eigs[..p.min(n)];
    let (emp_min, emp_max) = (bulk[bulk.len() - 1], bulk[0]);
    let relative_error_min =
        if model.lambda_minus > 0.0 { rel(emp_min, model.lambda_minus) } else { emp_min.abs() };
    Ok(SimulationReport {
        n,
        p,
        sigma2,
        seed,
        histogram: Histogram::of(&eigs, HISTOGRAM_BINS),
        prediction: Prediction::Mp {
            lambda_minus: model.lambda_minus,
            lambda_plus: model.lambda_plus,
            empirical_min: emp_min,
            empirical_max: emp_max,
            relative_error_min,
            relative_error_max: rel(emp_max, model.lambda_plus),
        },
    })
}

/// Normalised Wigner spectrum against the semicircle edge and moments.
pub fn simulate_wigner(p: usize, sigma: f64, seed: u64) -> Result<SimulationReport> {
    let m = sample_wigner(p, sigma, seed)?;
    let eigs = normalized_wigner_eigenvalues(m.as_ref())?;
    let moment = |k: i32| eigs.iter().map(|l| l.powi(k)).sum::<f64>() / p as f64;
    Ok(SimulationReport {
        n: p,
        p,
        sigma2: sigma * sigma,
        seed,
        histogram: Histogram::of(&eigs, HISTOGRAM_BINS),
        prediction: Prediction::Wigner {
            edge: 2.0 * sigma,
            empirical_min: eigs[p - 1],
            empirical_max: eigs[0],
            moment2: semicircle_moment(2, sigma)?,
            empirical_moment2: moment(2),
            moment4: semicircle_moment(4, sigma)?,
            empirical_moment4: moment(4),
        },
    })
}

/// Planted spikes `λ′ = β·σ²` against their predicted outlier locations.
pub fn simulate_spike(n: usize, c: f64, betas: &[f64], sigma2: f64, seed: u64) -> Result<SimulationReport> {
    if betas.is_empty() {
        return Err(Error::Domain("at least one beta is required".into()));
    }
    let p = (c * n as f64).round() as usize;
    let mut sorted = betas.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let spikes: Vec<f64> = sorted.iter().map(|b| b * sigma2).collect();
    let (eigs, c_eff) = sample_covariance_eigenvalues(n, p, &spikes, sigma2, seed)?;
    let model = mp_bulk_edges(sigma2, c_eff)?;
    let comparisons = spikes
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            let pred = spiked_outlier_location(l, sigma2, c_eff)?;
            Ok(SpikeComparison {
                beta: pred.beta,
                supercritical: pred.supercritical,
                predicted: pred.outlier_location,
                empirical: eigs[j],
                relative_error: pred.outlier_location.map(|loc| rel(eigs[j], loc)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let supercritical = comparisons.iter().filter(|s| s.supercritical).count();
    let above = eigs.iter().take_while(|&&l| l > model.lambda_plus).count();
    Ok(SimulationReport {
        n,
        p,
        sigma2,
        seed,
        histogram: Histogram::of(&eigs, HISTOGRAM_BINS),
        prediction: Prediction::Spike {
            lambda_plus: model.lambda_plus,
            spikes: comparisons,
            extra_outliers: above.saturating_sub(supercritical),
        },
    })
}
