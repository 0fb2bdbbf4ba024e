//! Calibration of the causal eigenvalue threshold and the inference-time filter.
//!
//! [`calibrate`] pools the validation inputs into one covariance, finds the
//! eigenvalues that escape the Marchenko–Pastur bulk, scores each outlier
//! direction with RbNS and keeps the directions whose nonconformity falls at
//! or below the `γ`-quantile. The smallest eigenvalue among them is `τ*`.
//!
//! [`filter_input`] projects a new input onto its causal subspace, either the
//! input's own eigenvectors with eigenvalue `> τ*` ([`FilterMode::PerInput`])
//! or the stored calibration directions ([`FilterMode::Global`]).

mod artifact;

pub use artifact::{decode_calibration, encode_calibration, load_calibration, save_calibration};

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{CalibrationFailure, CalibrationFailureKind, Error, Result};
use crate::features::{spectral_energy_features, FeatureConfig};
use crate::linalg;
use crate::par::{try_map_range, Execution};
use crate::rbns::{
    causal_eigenvalue_threshold, make_folds, project_directions, quantile_threshold, score_directions,
    RbnsRecord, ScoringConfig, TrainingConfig, DEFAULT_FOLDS, DEFAULT_GAMMA, DEFAULT_LOWER_QUANTILE,
};
use crate::rmt::{detect_outliers, estimate_noise_variance, mp_bulk_edges, MpModel, DEFAULT_OUTLIER_SLACK};
use crate::rng::{derive_seed, stream};
use crate::spectral::{
    decompose_sample, patch_matrix, project_rows, reassemble, symmetric_eig, CausalProjector, Image,
    SampleMatrix, SpectralDecomposition,
};

/// Version of the calibration pipeline and artifact schema.
pub const PIPELINE_VERSION: u32 = 1;
/// Fewest validation inputs accepted regardless of the fold count.
pub const MIN_VALIDATION_INPUTS: usize = 20;
const UNIT_TOL: f64 = 1e-9;

/// A validation or inference input: an embedding batch or an image.
#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Samples(SampleMatrix),
    Image(Image),
}

impl Input {
    /// The sample matrix the spectral pipeline sees (images become patch rows).
    pub fn to_samples(&self, patch_side: usize) -> Result<SampleMatrix> {
        match self {
            Input::Samples(s) => Ok(s.clone()),
            Input::Image(img) => patch_matrix(img, patch_side),
        }
    }
}

impl From<SampleMatrix> for Input {
    fn from(s: SampleMatrix) -> Self {
        Input::Samples(s)
    }
}

impl From<Image> for Input {
    fn from(i: Image) -> Self {
        Input::Image(i)
    }
}

/// Density-estimator and scoring hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub hidden_width: usize,
    pub epochs: usize,
    pub step_size: f64,
    pub folds: usize,
    pub lower_quantile: f64,
    /// Relative margin above `λ₊` an eigenvalue needs to count as an outlier.
    pub outlier_slack: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        let t = TrainingConfig::default();
        Self {
            hidden_width: t.hidden_width,
            epochs: t.epochs,
            step_size: t.step_size,
            folds: DEFAULT_FOLDS,
            lower_quantile: DEFAULT_LOWER_QUANTILE,
            outlier_slack: DEFAULT_OUTLIER_SLACK,
        }
    }
}

/// The master seed and the sub-seeds derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub master: u64,
    pub folds: u64,
    pub estimator: u64,
}

impl Seeds {
    pub fn from_master(master: u64) -> Self {
        Self {
            master,
            folds: derive_seed(master, stream::FOLDS),
            estimator: derive_seed(master, stream::ESTIMATOR),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConfig {
    pub estimator: EstimatorConfig,
    pub features: FeatureConfig,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            estimator: EstimatorConfig::default(),
            features: FeatureConfig::default(),
            seed: 0,
            execution: Execution::default(),
        }
    }
}

/// One outlier direction of the pooled spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierDirection {
    /// Rank in the pooled spectrum (0 = largest eigenvalue).
    pub index: usize,
    pub eigenvalue: f64,
    pub alpha: f64,
    /// Unit eigenvector, canonical sign.
    pub vector: Vec<f64>,
}

/// Everything inference needs, plus the provenance to recompute it.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub pipeline_version: u32,
    pub gamma: f64,
    pub t_hat: f64,
    pub tau_star: f64,
    pub mp_model: MpModel,
    /// All outliers in descending eigenvalue order.
    pub outlier_directions: Vec<OutlierDirection>,
    pub seeds: Seeds,
    pub feature_config: FeatureConfig,
    pub estimator_config: EstimatorConfig,
}

impl CalibrationResult {
    pub fn dim(&self) -> usize {
        self.outlier_directions.first().map_or(0, |d| d.vector.len())
    }

    /// Directions with `α ≤ t̂`.
    pub fn causal_directions(&self) -> impl Iterator<Item = &OutlierDirection> {
        self.outlier_directions.iter().filter(move |d| d.alpha <= self.t_hat)
    }

    pub fn causal_count(&self) -> usize {
        self.causal_directions().count()
    }

    /// Projector onto the stored causal directions.
    pub fn global_projector(&self) -> Result<CausalProjector> {
        let cols: Vec<Vec<f64>> = self.causal_directions().map(|d| d.vector.clone()).collect();
        if cols.is_empty() {
            return Err(Error::EmptySubspace);
        }
        CausalProjector::from_basis(linalg::from_columns(&cols)?)
    }

    /// Checks the invariants a loaded or freshly built result must satisfy.
    pub fn validate(&self) -> Result<()> {
        let p = self.dim();
        if self.outlier_directions.is_empty() {
            return Err(Error::Corrupt("calibration has no outlier directions".into()));
        }
        for d in &self.outlier_directions {
            if d.vector.len() != p {
                return Err(Error::DimensionMismatch { expected: p, found: d.vector.len() });
            }
            let n = linalg::norm(&d.vector);
            if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL.max(1e-12 * p as f64) {
                return Err(Error::Corrupt(format!("direction {} has norm {n}", d.index)));
            }
            if !(d.alpha >= 1.0) || !d.eigenvalue.is_finite() {
                return Err(Error::Corrupt(format!("direction {} has invalid scores", d.index)));
            }
        }
        if !(self.tau_star > self.mp_model.lambda_plus) {
            return Err(Error::Corrupt(format!(
                "tau* {} does not exceed the bulk edge {}",
                self.tau_star, self.mp_model.lambda_plus
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Corrupt(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        Ok(())
    }
}

/// Intermediate quantities of a calibration run.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationDiagnostics {
    /// Pooled eigenvalues, descending.
    pub spectrum: Vec<f64>,
    /// Number of rows pooled.
    pub pooled_rows: usize,
    pub records: Vec<RbnsRecord>,
    /// Per-direction mean overlap `mean_i u_ij`.
    pub mean_overlap: Vec<f64>,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Domain(format!("gamma {gamma} must lie in (0, 1]")));
    }
    Ok(())
}

/// Covariance of all validation rows, each input centred on its own mean when
/// `center` is set.
pub fn pooled_covariance(inputs: &[SampleMatrix], center: bool) -> Result<(Mat<f64>, usize)> {
    let p = inputs.first().map(SampleMatrix::ncols).ok_or_else(|| Error::Degenerate("no inputs".into()))?;
    let mut total = Mat::<f64>::zeros(p, p);
    let mut rows = 0;
    for input in inputs {
        if input.ncols() != p {
            return Err(Error::DimensionMismatch { expected: p, found: input.ncols() });
        }
        let x = if center && !input.is_centered() { input.centered().into_data() } else { input.data().to_owned() };
        total += linalg::scaled_gram(x.as_ref(), 1.0);
        rows += x.nrows();
    }
    Ok((total * faer::Scale(1.0 / rows as f64), rows))
}

/// Phase-1 calibration on inputs that may be images.
pub fn calibrate_inputs(inputs: &[Input], gamma: f64, config: &CalibrationConfig) -> Result<CalibrationResult> {
    let samples = inputs
        .iter()
        .map(|i| i.to_samples(config.features.patch_side))
        .collect::<Result<Vec<_>>>()?;
    calibrate(&samples, gamma, config)
}

/// Phase-1 calibration; see the module docs.
pub fn calibrate(inputs: &[SampleMatrix], gamma: f64, config: &CalibrationConfig) -> Result<CalibrationResult> {
    calibrate_with_diagnostics(inputs, gamma, config).map(|(r, _)| r)
}

pub fn calibrate_with_diagnostics(
    inputs: &[SampleMatrix],
    gamma: f64,
    config: &CalibrationConfig,
) -> Result<(CalibrationResult, CalibrationDiagnostics)> {
    check_gamma(gamma)?;
    let est = config.estimator;
    let needed = est.folds.max(MIN_VALIDATION_INPUTS);
    if inputs.len() < needed {
        return Err(Error::Degenerate(format!(
            "calibration needs at least {needed} validation inputs, got {}",
            inputs.len()
        )));
    }
    let center = config.features.center;
    let (pooled, rows) = pooled_covariance(inputs, center)?;
    let p = pooled.nrows();
    let global = symmetric_eig(pooled.as_ref())?;
    let spectrum = global.eigenvalues.clone();
    let c = p as f64 / rows as f64;
    let sigma2 = estimate_noise_variance(&spectrum, c)?;
    let mp_model = mp_bulk_edges(sigma2, c)?;
    let outliers = detect_outliers(&spectrum, &mp_model, est.outlier_slack)?;
    if outliers.is_empty() {
        return Err(Error::Calibration(CalibrationFailure {
            kind: CalibrationFailureKind::NoOutliers,
            spectrum,
            lambda_plus: Some(mp_model.lambda_plus),
            alphas: vec![],
            t_hat: None,
        }));
    }

    let exec = config.execution;
    let decomps: Vec<SpectralDecomposition> =
        try_map_range(exec, inputs.len(), |i| decompose_sample(&inputs[i], center))?;
    let directions: Vec<Vec<f64>> = outliers.iter().map(|&j| global.eigenvector(j)).collect();
    let projections = project_directions(&decomps, &directions)?;
    let features = spectral_energy_features(inputs, &global, &config.features)?;

    let seeds = Seeds::from_master(config.seed);
    let plan = make_folds(inputs.len(), est.folds, seeds.folds)?;
    let scoring = ScoringConfig {
        lower_quantile: est.lower_quantile,
        training: TrainingConfig {
            hidden_width: est.hidden_width,
            epochs: est.epochs,
            step_size: est.step_size,
            seed: seeds.estimator,
        },
    };
    let records = score_directions(&projections, features.as_ref(), &plan, scoring, exec)?;
    let alphas: Vec<f64> = records.iter().map(|r| r.alpha).collect();
    let outlier_eigs: Vec<f64> = outliers.iter().map(|&j| spectrum[j]).collect();
    let t_hat = quantile_threshold(&alphas, gamma)?;
    let selection = causal_eigenvalue_threshold(&records, &outlier_eigs, t_hat).map_err(|e| match e {
        Error::Calibration(f) => Error::Calibration(CalibrationFailure {
            spectrum: spectrum.clone(),
            lambda_plus: Some(mp_model.lambda_plus),
            ..f
        }),
        other => other,
    })?;

    let outlier_directions = outliers
        .iter()
        .zip(directions)
        .zip(&alphas)
        .map(|((&index, vector), &alpha)| OutlierDirection { index, eigenvalue: spectrum[index], alpha, vector })
        .collect();
    let result = CalibrationResult {
        pipeline_version: PIPELINE_VERSION,
        gamma,
        t_hat,
        tau_star: selection.tau_star,
        mp_model,
        outlier_directions,
        seeds,
        feature_config: config.features,
        estimator_config: est,
    };
    let diagnostics = CalibrationDiagnostics {
        spectrum,
        pooled_rows: rows,
        mean_overlap: projections
            .iter()
            .map(|pr| pr.values.iter().sum::<f64>() / pr.values.len() as f64)
            .collect(),
        records,
    };
    Ok((result, diagnostics))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    /// Keep the input's own eigenvectors whose eigenvalue exceeds `τ*`.
    #[default]
    PerInput,
    /// Project onto the calibration's causal directions.
    Global,
}

impl std::str::FromStr for FilterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_input" => Ok(FilterMode::PerInput),
            "global" => Ok(FilterMode::Global),
            other => Err(Error::Domain(format!("unknown filter mode '{other}' (per_input|global)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input_id: String,
    pub mode: FilterMode,
    pub retained_rank: usize,
    pub eigenvalues_kept: Vec<f64>,
    pub eigenvalues_dropped: Vec<f64>,
    pub passthrough: bool,
    /// `‖filtered‖²_F / ‖input‖²_F` over the sample rows (1 for an all-zero input).
    pub energy_retained: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub output: Input,
    pub report: FilterReport,
}

/// Phase-2 filter. An empty causal set passes the input through unchanged.
pub fn filter_input(
    input_id: impl Into<String>,
    input: &Input,
    calib: &CalibrationResult,
    mode: FilterMode,
) -> Result<Filtered> {
    let sample = input.to_samples(calib.feature_config.patch_side)?;
    let p = calib.dim();
    if sample.ncols() != p {
        return Err(Error::DimensionMismatch { expected: p, found: sample.ncols() });
    }
    let (projector, kept, dropped) = match mode {
        FilterMode::PerInput => {
            let decomp = decompose_sample(&sample, calib.feature_config.center)?;
            let (kept, dropped): (Vec<f64>, Vec<f64>) =
                decomp.eigenvalues.iter().partition(|&&l| l > calib.tau_star);
            let projector = if kept.is_empty() {
                None
            } else {
                let idx: Vec<usize> = (0..kept.len()).collect();
                Some(crate::spectral::build_projector(&decomp, &idx)?)
            };
            (projector, kept, dropped)
        }
        FilterMode::Global => {
            let (kept, dropped): (Vec<&OutlierDirection>, Vec<&OutlierDirection>) =
                calib.outlier_directions.iter().partition(|d| d.alpha <= calib.t_hat);
            let projector = if kept.is_empty() { None } else { Some(calib.global_projector()?) };
            (
                projector,
                kept.iter().map(|d| d.eigenvalue).collect(),
                dropped.iter().map(|d| d.eigenvalue).collect(),
            )
        }
    };
    let mut report = FilterReport {
        input_id: input_id.into(),
        mode,
        retained_rank: kept.len(),
        eigenvalues_kept: kept,
        eigenvalues_dropped: dropped,
        passthrough: true,
        energy_retained: 1.0,
    };
    let Some(projector) = projector else {
        return Ok(Filtered { output: input.clone(), report });
    };
    let filtered = project_rows(&sample, &projector)?;
    let before = linalg::frobenius_sq(sample.data());
    let after = linalg::frobenius_sq(filtered.data());
    report.passthrough = false;
    report.energy_retained = if before > 0.0 { (after / before).clamp(0.0, 1.0) } else { 1.0 };
    let output = match input {
        Input::Samples(_) => Input::Samples(filtered),
        Input::Image(_) => Input::Image(reassemble(&filtered)?),
    };
    Ok(Filtered { output, report })
}

/// Resolved settings shared by calibration and filtering runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub gamma: f64,
    pub folds: usize,
    pub lower_quantile: f64,
    pub patch_side: usize,
    pub hidden_width: usize,
    pub epochs: usize,
    pub step_size: f64,
    pub outlier_slack: f64,
    pub feature_dim: usize,
    pub center: bool,
    pub mode: FilterMode,
    /// Rows per input when inputs arrive stacked in one matrix.
    pub rows_per_input: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let est = EstimatorConfig::default();
        let feat = FeatureConfig::default();
        Self {
            seed: 0,
            gamma: DEFAULT_GAMMA,
            folds: est.folds,
            lower_quantile: est.lower_quantile,
            patch_side: feat.patch_side,
            hidden_width: est.hidden_width,
            epochs: est.epochs,
            step_size: est.step_size,
            outlier_slack: est.outlier_slack,
            feature_dim: feat.dim,
            center: feat.center,
            mode: FilterMode::PerInput,
            rows_per_input: 256,
        }
    }
}

impl RunConfig {
    pub fn calibration_config(&self, execution: Execution) -> CalibrationConfig {
        CalibrationConfig {
            estimator: EstimatorConfig {
                hidden_width: self.hidden_width,
                epochs: self.epochs,
                step_size: self.step_size,
                folds: self.folds,
                lower_quantile: self.lower_quantile,
                outlier_slack: self.outlier_slack,
            },
            features: FeatureConfig { dim: self.feature_dim, center: self.center, patch_side: self.patch_side },
            seed: self.seed,
            execution,
        }
    }

    /// Rejects values no run could use.
    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        let checks = [
            (self.folds >= 2, "folds must be >= 2"),
            ((0.0..=0.5).contains(&self.lower_quantile), "lower_quantile must lie in [0, 0.5]"),
            (self.patch_side >= 1, "patch_side must be >= 1"),
            (self.hidden_width >= 1, "hidden_width must be >= 1"),
            (self.step_size > 0.0 && self.step_size.is_finite(), "step_size must be positive"),
            (self.outlier_slack >= 0.0, "outlier_slack must be >= 0"),
            (self.feature_dim >= 1, "feature_dim must be >= 1"),
            (self.rows_per_input >= 2, "rows_per_input must be >= 2"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Domain((*msg).into())),
            None => Ok(()),
        }
    }
}
