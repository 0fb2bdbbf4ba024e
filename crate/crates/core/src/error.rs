use std::fmt;

use thiserror::Error;

/// Errors raised by the spectral pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// The input is well-formed but too small or degenerate to compute on.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// A caller-side precondition (ordering, symmetry, ...) does not hold.
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty causal subspace")]
    EmptySubspace,
    #[error("calibration failed: {0}")]
    Calibration(CalibrationFailure),
    #[error("corrupt file: {0}")]
    Corrupt(String),
    #[error("version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: u32, found: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Why calibration could not produce a threshold, with the spectrum that led there.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationFailure {
    pub kind: CalibrationFailureKind,
    /// Pooled eigenvalues, descending.
    pub spectrum: Vec<f64>,
    pub lambda_plus: Option<f64>,
    /// Nonconformity scores of the outlier directions, when they were computed.
    pub alphas: Vec<f64>,
    pub t_hat: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationFailureKind {
    NoOutliers,
    EmptyCausalSet,
}

impl fmt::Display for CalibrationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            CalibrationFailureKind::NoOutliers => write!(
                f,
                "no outliers above the bulk edge {:.6} (top eigenvalue {:.6})",
                self.lambda_plus.unwrap_or(f64::NAN),
                self.spectrum.first().copied().unwrap_or(f64::NAN)
            ),
            CalibrationFailureKind::EmptyCausalSet => write!(
                f,
                "no direction has alpha <= t_hat ({:?}); alphas {:?}",
                self.t_hat, self.alphas
            ),
        }
    }
}
