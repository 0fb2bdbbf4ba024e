//! Synthetic validation sets with known causal and spurious directions.
//!
//! Every input is an `m×p` block of Gaussian rows drawn around one shared
//! planted frame. Causal spikes are strong and present in every input.
//! Spurious spikes are weaker and sporadic: each is carried by a fixed
//! fraction of the inputs only, so it still clears the bulk edge of the pooled
//! covariance but its per-input behaviour is inconsistent across folds.

use faer::Mat;

use crate::error::{Error, Result};
use crate::rmt::{random_orthonormal_frame, sample_with_frame};
use crate::rng::{derive_seed, replica_seed, rng_from_seed, stream};
use crate::spectral::SampleMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSetSpec {
    pub inputs: usize,
    pub rows_per_input: usize,
    pub dim: usize,
    /// Population eigenvalues of the causal directions (descending).
    pub causal_spikes: Vec<f64>,
    /// Population eigenvalues of the spurious directions in the inputs that carry them.
    pub spurious_spikes: Vec<f64>,
    /// Spurious direction `s` is present only in inputs with
    /// `i % spurious_period < spurious_presence[s]`. Descending presences nest
    /// the carrier sets, so in every carrier the spurious spikes keep their rank.
    pub spurious_presence: Vec<usize>,
    pub spurious_period: usize,
    pub sigma2: f64,
    pub seed: u64,
}

impl ValidationSetSpec {
    /// 2 causal spikes (16, 9) and 2 near-edge spurious ones at `p = 64`, `c = 0.25` per input.
    pub fn causal_and_spurious(inputs: usize, seed: u64) -> Self {
        Self {
            inputs,
            rows_per_input: 256,
            dim: 64,
            causal_spikes: vec![16.0, 9.0],
            spurious_spikes: vec![3.5, 2.5],
            spurious_presence: vec![3, 2],
            spurious_period: 10,
            sigma2: 1.0,
            seed,
        }
    }

    /// Three planted spikes (16, 9, 4), `p = 64`, `c = 0.25` per input.
    pub fn three_spikes(inputs: usize, seed: u64) -> Self {
        Self {
            inputs,
            rows_per_input: 256,
            dim: 64,
            causal_spikes: vec![16.0, 9.0, 4.0],
            spurious_spikes: vec![],
            spurious_presence: vec![],
            spurious_period: 1,
            sigma2: 1.0,
            seed,
        }
    }

    /// Population eigenvalues planted in input `i` (absent spurious spikes sit at `σ²`).
    pub fn spikes_for_input(&self, i: usize) -> Vec<f64> {
        let spurious = self.spurious_spikes.iter().enumerate().map(|(s, &l)| {
            if i % self.spurious_period.max(1) < self.spurious_presence.get(s).copied().unwrap_or(0) {
                l
            } else {
                self.sigma2
            }
        });
        self.causal_spikes.iter().copied().chain(spurious).collect()
    }

    pub fn planted_count(&self) -> usize {
        self.causal_spikes.len() + self.spurious_spikes.len()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticValidationSet {
    pub inputs: Vec<SampleMatrix>,
    /// `p × (causal + spurious)`; causal columns first.
    pub frame: Mat<f64>,
    pub causal_count: usize,
    pub spec: ValidationSetSpec,
}

impl SyntheticValidationSet {
    pub fn causal_direction(&self, j: usize) -> Vec<f64> {
        crate::linalg::col_to_vec(self.frame.as_ref(), j)
    }

    pub fn direction(&self, j: usize) -> Vec<f64> {
        crate::linalg::col_to_vec(self.frame.as_ref(), j)
    }
}

/// The planted frame for a spec; inputs drawn later with the same seed share it.
pub fn planted_frame(spec: &ValidationSetSpec) -> Mat<f64> {
    let k = spec.planted_count();
    random_orthonormal_frame(spec.dim, k, &mut rng_from_seed(derive_seed(spec.seed, stream::FRAME)))
}

/// Draws input `i` of the set (pure function of the spec and `i`).
pub fn draw_input(spec: &ValidationSetSpec, frame: &Mat<f64>, i: usize) -> Result<SampleMatrix> {
    let data = sample_with_frame(
        spec.rows_per_input,
        frame.as_ref(),
        &spec.spikes_for_input(i),
        spec.sigma2,
        replica_seed(derive_seed(spec.seed, stream::DATA), i as u64),
    );
    SampleMatrix::new(data)
}

pub fn validation_set(spec: &ValidationSetSpec) -> Result<SyntheticValidationSet> {
    if spec.planted_count() >= spec.dim {
        return Err(Error::Domain("more planted directions than dimensions".into()));
    }
    let frame = planted_frame(spec);
    let inputs = (0..spec.inputs).map(|i| draw_input(spec, &frame, i)).collect::<Result<Vec<_>>>()?;
    Ok(SyntheticValidationSet { inputs, frame, causal_count: spec.causal_spikes.len(), spec: spec.clone() })
}

/// Stacks inputs row-wise into one matrix (the on-disk layout).
pub fn stack_inputs(inputs: &[SampleMatrix]) -> Mat<f64> {
    let p = inputs.first().map_or(0, SampleMatrix::ncols);
    let n: usize = inputs.iter().map(SampleMatrix::nrows).sum();
    let mut out = Mat::<f64>::zeros(n, p);
    let mut r = 0;
    for input in inputs {
        let x = input.data();
        for i in 0..x.nrows() {
            for j in 0..p {
                out[(r, j)] = x[(i, j)];
            }
            r += 1;
        }
    }
    out
}

/// Splits a stacked matrix into consecutive blocks of `rows_per_input` rows.
pub fn split_inputs(stacked: &Mat<f64>, rows_per_input: usize) -> Result<Vec<SampleMatrix>> {
    if rows_per_input < 2 || stacked.nrows() % rows_per_input != 0 {
        return Err(Error::Domain(format!(
            "{} rows cannot be split into inputs of {rows_per_input} rows",
            stacked.nrows()
        )));
    }
    (0..stacked.nrows() / rows_per_input)
        .map(|b| {
            let block = stacked.as_ref().subrows(b * rows_per_input, rows_per_input).to_owned();
            SampleMatrix::new(block)
        })
        .collect()
}
