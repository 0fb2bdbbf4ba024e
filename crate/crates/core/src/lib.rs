//! Random-matrix spectral defense toolkit.
//!
//! The pipeline has two phases. Calibration pools the covariance of a
//! validation set, finds eigenvalues that escape the Marchenko–Pastur bulk,
//! scores each outlier direction by how stable a conditional density model
//! built on it is under K-fold cross-validation, and turns those scores into
//! an eigenvalue cutoff `τ*`. Filtering then eigendecomposes each new input
//! and projects it onto the eigenvectors whose eigenvalues exceed `τ*`.
//!
//! Modules:
//! - [`rmt`]: spectral laws, spike predictions, samplers
//! - [`spectral`]: sample matrices, eigendecomposition, projectors
//! - [`rbns`]: robustness-based nonconformity scoring
//! - [`defense`]: calibration and inference-time filtering
//! - [`metrics`]: attack success rate and information-theoretic quantities
//! - [`io`]: matrix files and CSV
//! - [`validation`]: the end-to-end check suites

pub mod defense;
pub mod error;
pub mod features;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod par;
pub mod quad;
pub mod rbns;
pub mod rmt;
pub mod rng;
pub mod simulate;
pub mod spectral;
pub mod synth;
pub mod validation;

pub use error::{Error, Result};
pub use faer::Mat;
pub use par::Execution;
