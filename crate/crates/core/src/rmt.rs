//! Random-matrix laws and samplers.
//!
//! Semicircle and Marchenko–Pastur densities, the spiked-covariance outlier
//! prediction, outlier detection against the MP bulk, a robust noise-variance
//! estimate, the signal-plus-isotropic-noise covariance fit, and seeded
//! Wigner / spiked-data samplers used to validate all of the above.

use std::f64::consts::PI;

use faer::{Mat, MatRef};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::quad::{adaptive_simpson, bisect, BISECT_TOL, QUAD_TOL};
use crate::rng::{derive_seed, rng_from_seed, stream, Rng};
use crate::spectral::{symmetric_eig, symmetric_eigenvalues};

/// Default relative slack above `λ₊` before an eigenvalue counts as an outlier.
pub const DEFAULT_OUTLIER_SLACK: f64 = 0.01;

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Semicircle density with scale `sigma`, supported on `[-2σ, 2σ]`.
pub fn wigner_pdf(lambda: f64, sigma: f64) -> Result<f64> {
    require_positive("sigma", sigma)?;
    let s2 = sigma * sigma;
    let r = 4.0 * s2 - lambda * lambda;
    Ok(if r > 0.0 { r.sqrt() / (2.0 * PI * s2) } else { 0.0 })
}

/// `∫ x^k ρ_sc(x) dx` by adaptive quadrature of [`wigner_pdf`].
///
/// Integrates in the angle `x = 2σ·cos θ`, which removes the square-root
/// endpoints. Odd orders vanish by symmetry.
pub fn semicircle_moment(k: u32, sigma: f64) -> Result<f64> {
    require_positive("sigma", sigma)?;
    if k % 2 == 1 {
        return Ok(0.0);
    }
    let integrand = |theta: f64| {
        let x = 2.0 * sigma * theta.cos();
        let jac = 2.0 * sigma * theta.sin();
        x.powi(k as i32) * wigner_pdf(x, sigma).unwrap_or(0.0) * jac
    };
    Ok(adaptive_simpson(integrand, 0.0, PI, QUAD_TOL))
}

/// Marchenko–Pastur parameters and bulk edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpModel {
    pub sigma2: f64,
    pub c: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
}

/// `λ± = σ²(1 ± √c)²`.
pub fn mp_bulk_edges(sigma2: f64, c: f64) -> Result<MpModel> {
    require_positive("sigma2", sigma2)?;
    require_positive("aspect ratio c", c)?;
    let sc = c.sqrt();
    Ok(MpModel {
        sigma2,
        c,
        lambda_minus: sigma2 * (1.0 - sc) * (1.0 - sc),
        lambda_plus: sigma2 * (1.0 + sc) * (1.0 + sc),
    })
}

impl MpModel {
    pub fn contains(&self, lambda: f64) -> bool {
        lambda >= self.lambda_minus && lambda <= self.lambda_plus
    }

    /// Mass of the absolutely continuous part (`min(1, 1/c)`).
    pub fn continuous_mass(&self) -> f64 {
        if self.c > 1.0 {
            1.0 / self.c
        } else {
            1.0
        }
    }

    /// Map θ ∈ [0, π] onto the support; `λ(0) = λ₋`, `λ(π) = λ₊`.
    fn angle_to_lambda(&self, theta: f64) -> f64 {
        let mid = 0.5 * (self.lambda_plus + self.lambda_minus);
        let half = 0.5 * (self.lambda_plus - self.lambda_minus);
        mid - half * theta.cos()
    }

    /// `pdf(λ(θ))·dλ/dθ`, which is smooth on `[0, π]`.
    fn angular_density(&self, theta: f64) -> f64 {
        let half = 0.5 * (self.lambda_plus - self.lambda_minus);
        let s = theta.sin();
        let lam = self.angle_to_lambda(theta);
        if lam <= 0.0 {
            // c = 1 at θ = 0, where half²·sin²θ/λ reduces to half·(1 + cos θ).
            return half * (1.0 + theta.cos()) / (2.0 * PI * self.sigma2 * self.c);
        }
        half * half * s * s / (2.0 * PI * self.sigma2 * self.c * lam)
    }

    /// Continuous-part CDF at `x`, normalised to 1 over the support.
    pub fn continuous_cdf(&self, x: f64) -> f64 {
        if x <= self.lambda_minus {
            return 0.0;
        }
        if x >= self.lambda_plus {
            return 1.0;
        }
        let mid = 0.5 * (self.lambda_plus + self.lambda_minus);
        let half = 0.5 * (self.lambda_plus - self.lambda_minus);
        let theta = ((mid - x) / half).clamp(-1.0, 1.0).acos();
        let mass = adaptive_simpson(|t| self.angular_density(t), 0.0, theta, QUAD_TOL);
        (mass / self.continuous_mass()).clamp(0.0, 1.0)
    }
}

/// Marchenko–Pastur density `√((λ₊−λ)(λ−λ₋)) / (2πσ²cλ)` on the support, zero elsewhere.
///
/// For `c > 1` this is the continuous part only; the atom of mass `1 − 1/c`
/// at zero is not represented.
pub fn mp_pdf(lambda: f64, model: &MpModel) -> f64 {
    if lambda <= 0.0 || lambda < model.lambda_minus || lambda > model.lambda_plus {
        return 0.0;
    }
    let r = (model.lambda_plus - lambda) * (lambda - model.lambda_minus);
    if r <= 0.0 {
        return 0.0;
    }
    r.sqrt() / (2.0 * PI * model.sigma2 * model.c * lambda)
}

/// Median of the unit-variance MP law (of its continuous part when `c > 1`),
/// found by bisection on the quadrature CDF.
pub fn mp_median(c: f64) -> Result<f64> {
    let model = mp_bulk_edges(1.0, c)?;
    Ok(bisect(
        |x| model.continuous_cdf(x) - 0.5,
        model.lambda_minus,
        model.lambda_plus,
        BISECT_TOL,
    ))
}

/// Outlier prediction for a population spike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikePrediction {
    /// `λ′ / σ²`.
    pub beta: f64,
    pub supercritical: bool,
    /// `σ²(β + cβ/(β−1))` when supercritical.
    pub outlier_location: Option<f64>,
}

/// Separation threshold for `β`: `(1 + √c)²`.
pub fn supercritical_threshold(c: f64) -> f64 {
    (1.0 + c.sqrt()).powi(2)
}

pub fn spiked_outlier_location(lambda_prime: f64, sigma2: f64, c: f64) -> Result<SpikePrediction> {
    require_positive("lambda_prime", lambda_prime)?;
    require_positive("sigma2", sigma2)?;
    require_positive("aspect ratio c", c)?;
    let beta = lambda_prime / sigma2;
    let supercritical = beta > supercritical_threshold(c);
    let outlier_location = supercritical.then(|| sigma2 * (beta + c * beta / (beta - 1.0)));
    Ok(SpikePrediction { beta, supercritical, outlier_location })
}

/// Indices of eigenvalues above `λ₊·(1 + slack)`. Input must be descending,
/// so the result is always a prefix `0..m`.
pub fn detect_outliers(eigenvalues: &[f64], model: &MpModel, slack: f64) -> Result<Vec<usize>> {
    if !(slack >= 0.0) {
        return Err(Error::Domain(format!("slack must be >= 0, got {slack}")));
    }
    if let Some(w) = eigenvalues.windows(2).position(|w| w[0] < w[1]) {
        return Err(Error::Contract(format!(
            "eigenvalues must be sorted descending (violated at index {})",
            w + 1
        )));
    }
    let cut = model.lambda_plus * (1.0 + slack);
    Ok(eigenvalues.iter().take_while(|&&l| l > cut).enumerate().map(|(i, _)| i).collect())
}

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// `σ̂² = median(eigenvalues) / mp_median(c)`.
///
/// When `c > 1` only the largest `round(len / c)` eigenvalues take part; the
/// rest belong to the null space of the sample covariance.
pub fn estimate_noise_variance(eigenvalues: &[f64], c: f64) -> Result<f64> {
    require_positive("aspect ratio c", c)?;
    if eigenvalues.is_empty() {
        return Err(Error::Degenerate("no eigenvalues".into()));
    }
    let mut vals: Vec<f64> = eigenvalues.to_vec();
    if c > 1.0 {
        vals.sort_by(|a, b| b.total_cmp(a));
        let keep = ((vals.len() as f64 / c).round() as usize).clamp(1, vals.len());
        vals.truncate(keep);
    }
    let med = median_of(&mut vals);
    if !(med > 0.0) {
        return Err(Error::Degenerate(format!("median eigenvalue is {med}; spectrum is degenerate")));
    }
    Ok(med / mp_median(c)?)
}

/// Low-rank signal plus isotropic noise: `UΛUᵀ + σ²I`.
#[derive(Debug, Clone, PartialEq)]
pub struct RmtFit {
    /// `p×r`, orthonormal columns.
    pub basis: Mat<f64>,
    pub signal_eigs: Vec<f64>,
    pub sigma2: f64,
    /// Squared Frobenius residual.
    pub loss: f64,
    /// Set when some signal eigenvalue came out negative (model misfit).
    pub negative_signal: bool,
}

impl RmtFit {
    pub fn model_covariance(&self) -> Mat<f64> {
        let u = self.basis.as_ref();
        let p = u.nrows();
        let scaled = Mat::from_fn(p, u.ncols(), |i, j| u[(i, j)] * self.signal_eigs[j]);
        let mut m = &scaled * u.transpose();
        for i in 0..p {
            m[(i, i)] += self.sigma2;
        }
        m
    }
}

/// `‖C − (UΛUᵀ + σ²I)‖_F²`.
pub fn rmt_loss(cov: MatRef<'_, f64>, fit: &RmtFit) -> Result<f64> {
    let p = cov.nrows();
    if cov.ncols() != p {
        return Err(Error::DimensionMismatch { expected: p, found: cov.ncols() });
    }
    if fit.basis.nrows() != p {
        return Err(Error::DimensionMismatch { expected: p, found: fit.basis.nrows() });
    }
    if fit.signal_eigs.len() != fit.basis.ncols() {
        return Err(Error::DimensionMismatch {
            expected: fit.basis.ncols(),
            found: fit.signal_eigs.len(),
        });
    }
    let model = fit.model_covariance();
    let resid = Mat::from_fn(p, p, |i, j| cov[(i, j)] - model[(i, j)]);
    Ok(linalg::frobenius_sq(resid.as_ref()))
}

/// Closed-form minimiser of [`rmt_loss`] at rank `r`.
///
/// `U` = top-`r` eigenvectors, `σ̂²` = mean of the trailing `p − r`
/// eigenvalues, `Λᵢ = λᵢ − σ̂²`.
pub fn fit_rmt_decomposition(cov: MatRef<'_, f64>, r: usize) -> Result<RmtFit> {
    let p = cov.nrows();
    if r == 0 || r >= p {
        return Err(Error::Domain(format!("rank r must satisfy 1 <= r < p = {p}, got {r}")));
    }
    let d = symmetric_eig(cov)?;
    let sigma2 = d.eigenvalues[r..].iter().sum::<f64>() / (p - r) as f64;
    let signal_eigs: Vec<f64> = d.eigenvalues[..r].iter().map(|l| l - sigma2).collect();
    let basis = Mat::from_fn(p, r, |i, j| d.eigenvectors[(i, j)]);
    let negative_signal = signal_eigs.iter().any(|&l| l < 0.0);
    let mut fit = RmtFit { basis, signal_eigs, sigma2, loss: 0.0, negative_signal };
    fit.loss = rmt_loss(cov, &fit)?;
    Ok(fit)
}

/// Symmetric `p×p` matrix with i.i.d. `N(0, σ²)` entries on and above the diagonal.
pub fn sample_wigner(p: usize, sigma: f64, seed: u64) -> Result<Mat<f64>> {
    if p < 2 {
        return Err(Error::Domain(format!("Wigner dimension must be >= 2, got {p}")));
    }
    require_positive("sigma", sigma)?;
    let mut rng = rng_from_seed(seed);
    let mut m = Mat::<f64>::zeros(p, p);
    for j in 0..p {
        for i in 0..=j {
            let g: f64 = rng.sample(StandardNormal);
            m[(i, j)] = sigma * g;
            m[(j, i)] = sigma * g;
        }
    }
    Ok(m)
}

/// Eigenvalues of `M/√p`, descending.
pub fn normalized_wigner_eigenvalues(m: MatRef<'_, f64>) -> Result<Vec<f64>> {
    let scale = 1.0 / (m.nrows() as f64).sqrt();
    let scaled = Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * scale);
    symmetric_eigenvalues(scaled.as_ref())
}

/// Seeded uniformly random `p×k` orthonormal frame (Gaussian + Gram–Schmidt).
pub fn random_orthonormal_frame(p: usize, k: usize, rng: &mut Rng) -> Mat<f64> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    while cols.len() < k {
        let mut v: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        // Two Gram–Schmidt passes keep the frame orthonormal to ~1e-15.
        for _ in 0..2 {
            for c in &cols {
                let d = linalg::dot(&v, c);
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= d * y);
            }
        }
        let nrm = linalg::norm(&v);
        if nrm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nrm);
            cols.push(v);
        }
    }
    Mat::from_fn(p, k, |i, j| cols[j][i])
}

/// Gaussian data with a planted low-rank covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikedDataset {
    /// `n×p`, rows i.i.d.
    pub data: Mat<f64>,
    /// `p×k` planted orthonormal directions, column `j` carries `spikes[j]`.
    pub frame: Mat<f64>,
    pub spikes: Vec<f64>,
    pub sigma2: f64,
}

impl SpikedDataset {
    /// Population covariance `σ²I + V·diag(λ′ − σ²)·Vᵀ`.
    pub fn population_covariance(&self) -> Mat<f64> {
        let v = self.frame.as_ref();
        let p = v.nrows();
        let scaled = Mat::from_fn(p, v.ncols(), |i, j| v[(i, j)] * (self.spikes[j] - self.sigma2));
        let mut m = &scaled * v.transpose();
        for i in 0..p {
            m[(i, i)] += self.sigma2;
        }
        m
    }
}

/// Draws `n` rows whose population covariance has eigenvalue `λ′_j` along the
/// planted direction `v_j` and `σ²` on the orthogonal complement.
///
/// The frame comes from the seed's frame stream and the samples from its data
/// stream, so two datasets with the same seed share directions.
pub fn sample_spiked_dataset(
    n: usize,
    p: usize,
    spikes: &[f64],
    sigma2: f64,
    seed: u64,
) -> Result<SpikedDataset> {
    require_positive("sigma2", sigma2)?;
    if n < 2 || p < 2 {
        return Err(Error::Domain(format!("need n >= 2 and p >= 2, got n={n}, p={p}")));
    }
    if spikes.len() >= p {
        return Err(Error::Domain(format!("{} spikes do not fit in dimension {p}", spikes.len())));
    }
    for &s in spikes {
        require_positive("spike", s)?;
    }
    let mut frame_rng = rng_from_seed(derive_seed(seed, stream::FRAME));
    let frame = random_orthonormal_frame(p, spikes.len(), &mut frame_rng);
    let data = sample_with_frame(n, frame.as_ref(), spikes, sigma2, derive_seed(seed, stream::DATA));
    Ok(SpikedDataset { data, frame, spikes: spikes.to_vec(), sigma2 })
}

/// Rows `x = σg + V·((√λ′ − σ) ⊙ Vᵀg)` for a caller-supplied frame.
pub fn sample_with_frame(
    n: usize,
    frame: MatRef<'_, f64>,
    spikes: &[f64],
    sigma2: f64,
    seed: u64,
) -> Mat<f64> {
    let p = frame.nrows();
    let sigma = sigma2.sqrt();
    let mut rng = rng_from_seed(seed);
    let g = Mat::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut data = Mat::from_fn(n, p, |i, j| sigma * g[(i, j)]);
    if !spikes.is_empty() {
        let coeffs = &g * frame;
        let boost: Vec<f64> = spikes.iter().map(|s| s.sqrt() - sigma).collect();
        let scaled = Mat::from_fn(n, spikes.len(), |i, j| coeffs[(i, j)] * boost[j]);
        data += &scaled * frame.transpose();
    }
    data
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wigner_pdf_values() {
        assert!((wigner_pdf(0.0, 1.0).unwrap() - 1.0 / PI).abs() < 1e-12);
        assert_eq!(wigner_pdf(2.5, 1.0).unwrap(), 0.0);
        assert!((wigner_pdf(1.0, 1.0).unwrap() - 3f64.sqrt() / (2.0 * PI)).abs() < 1e-12);
        assert!((wigner_pdf(0.0, 1.0).unwrap() - 0.3183098861).abs() < 1e-10);
        assert!((wigner_pdf(1.0, 1.0).unwrap() - 0.2756644).abs() < 1e-7);
        assert!(matches!(wigner_pdf(0.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(wigner_pdf(0.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn wigner_pdf_integrates_to_one() {
        // Plain λ-coordinate quadrature, independent of the angle substitution.
        for sigma in [0.5, 1.0, 3.0] {
            let v = adaptive_simpson(|x| wigner_pdf(x, sigma).unwrap(), -2.0 * sigma, 2.0 * sigma, QUAD_TOL);
            assert!((v - 1.0).abs() < 1e-7, "sigma={sigma}: {v}");
        }
    }

    #[test]
    fn semicircle_moments_match_catalan() {
        assert!((semicircle_moment(2, 1.0).unwrap() - 1.0).abs() < 1e-8);
        assert!((semicircle_moment(4, 1.0).unwrap() - 2.0).abs() < 1e-8);
        assert!((semicircle_moment(6, 1.0).unwrap() - 5.0).abs() < 1e-8);
        assert_eq!(semicircle_moment(3, 1.0).unwrap(), 0.0);
        assert!((semicircle_moment(0, 2.0).unwrap() - 1.0).abs() < 1e-8);
        // κ₄ scales as σ⁴
        assert!((semicircle_moment(4, 1.5).unwrap() - 2.0 * 1.5f64.powi(4)).abs() < 1e-7);
    }

    #[test]
    fn mp_edges_examples() {
        let m = mp_bulk_edges(1.0, 0.25).unwrap();
        assert!((m.lambda_minus - 0.25).abs() < 1e-15 && (m.lambda_plus - 2.25).abs() < 1e-15);
        let m = mp_bulk_edges(1.0, 1.0).unwrap();
        assert_eq!((m.lambda_minus, m.lambda_plus), (0.0, 4.0));
        let m = mp_bulk_edges(2.0, 0.25).unwrap();
        assert!((m.lambda_minus - 0.5).abs() < 1e-15 && (m.lambda_plus - 4.5).abs() < 1e-15);
        assert!(matches!(mp_bulk_edges(0.0, 0.5), Err(Error::Domain(_))));
        assert!(matches!(mp_bulk_edges(1.0, -0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn mp_pdf_outside_support_is_zero() {
        let m = mp_bulk_edges(1.0, 0.25).unwrap();
        assert_eq!(mp_pdf(0.1, &m), 0.0);
        assert_eq!(mp_pdf(2.3, &m), 0.0);
        assert_eq!(mp_pdf(-1.0, &m), 0.0);
        assert!(mp_pdf(1.0, &m) > 0.0);
    }

    #[test]
    fn mp_pdf_integrates_to_one() {
        // Oracle: direct λ-coordinate adaptive quadrature of the density.
        for (s2, c) in [(1.0, 0.25), (2.0, 0.5), (0.7, 0.9)] {
            let m = mp_bulk_edges(s2, c).unwrap();
            let v = adaptive_simpson(|x| mp_pdf(x, &m), m.lambda_minus, m.lambda_plus, QUAD_TOL);
            assert!((v - 1.0).abs() < 1e-6, "({s2},{c}) -> {v}");
        }
    }

    #[test]
    fn mp_cdf_is_monotone_and_normalised() {
        for c in [0.1, 0.25, 1.0, 2.0] {
            let m = mp_bulk_edges(1.0, c).unwrap();
            let mut last = 0.0;
            for i in 0..=50 {
                let x = m.lambda_minus + (m.lambda_plus - m.lambda_minus) * i as f64 / 50.0;
                let f = m.continuous_cdf(x);
                assert!(f + 1e-12 >= last, "c={c}");
                last = f;
            }
            assert!((m.continuous_cdf(m.lambda_plus - 1e-12) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn mp_median_is_a_median() {
        for c in [0.00125, 0.25, 0.5, 1.0, 3.0] {
            let med = mp_median(c).unwrap();
            let m = mp_bulk_edges(1.0, c).unwrap();
            // independent check by raw-coordinate quadrature
            let mass = adaptive_simpson(|x| mp_pdf(x, &m), m.lambda_minus, med, QUAD_TOL) / m.continuous_mass();
            assert!((mass - 0.5).abs() < 1e-6, "c={c}: {mass}");
        }
    }

    #[test]
    fn mp_edge_identities() {
        for (s2, c) in [(1.0, 0.25), (3.0, 0.7), (0.2, 2.5), (5.0, 1.0)] {
            let m = mp_bulk_edges(s2, c).unwrap();
            let prod = s2 * s2 * (1.0 - c) * (1.0 - c);
            assert!((m.lambda_plus * m.lambda_minus - prod).abs() < 1e-12 * (1.0 + prod));
            assert!((m.lambda_plus + m.lambda_minus - 2.0 * s2 * (1.0 + c)).abs() < 1e-12 * s2 * 10.0);
        }
    }

    #[test]
    fn spike_examples() {
        let s = spiked_outlier_location(9.0, 1.0, 0.25).unwrap();
        assert!(s.supercritical);
        assert_eq!(s.outlier_location, Some(9.28125));
        let s = spiked_outlier_location(2.0, 1.0, 0.25).unwrap();
        assert!(!s.supercritical);
        assert_eq!(s.outlier_location, None);
        assert!(matches!(spiked_outlier_location(0.0, 1.0, 0.25), Err(Error::Domain(_))));
    }

    #[test]
    fn supercritical_location_exceeds_bulk() {
        for c in [0.1, 0.25, 0.5, 1.0] {
            let edge = mp_bulk_edges(1.0, c).unwrap().lambda_plus;
            for b in [2.5, 4.0, 9.0, 30.0] {
                let s = spiked_outlier_location(b, 1.0, c).unwrap();
                if let Some(loc) = s.outlier_location {
                    assert!(loc > edge);
                }
            }
        }
    }

    #[test]
    fn detect_outliers_examples() {
        let m = MpModel { sigma2: 1.0, c: 0.25, lambda_minus: 0.25, lambda_plus: 2.25 };
        assert_eq!(detect_outliers(&[9.3, 2.1, 1.0, 0.5], &m, 0.01).unwrap(), vec![0]);
        assert!(detect_outliers(&[2.2, 2.1, 1.0], &m, 0.01).unwrap().is_empty());
        assert!(matches!(detect_outliers(&[1.0, 2.0], &m, 0.01), Err(Error::Contract(_))));
        // slack keeps near-edge values out
        assert!(detect_outliers(&[2.26], &m, 0.01).unwrap().is_empty());
        assert_eq!(detect_outliers(&[2.26], &m, 0.0).unwrap(), vec![0]);
    }

    #[test]
    fn noise_variance_scale_equivariant() {
        let ev: Vec<f64> = (0..100).map(|i| 0.3 + i as f64 * 0.02).collect();
        let a = estimate_noise_variance(&ev, 0.25).unwrap();
        let scaled: Vec<f64> = ev.iter().map(|x| 4.0 * x).collect();
        let b = estimate_noise_variance(&scaled, 0.25).unwrap();
        assert_eq!(b, 4.0 * a);
    }

    #[test]
    fn noise_variance_degenerate() {
        assert!(matches!(estimate_noise_variance(&[0.0, 0.0, 0.0], 0.5), Err(Error::Degenerate(_))));
        assert!(matches!(estimate_noise_variance(&[], 0.5), Err(Error::Degenerate(_))));
    }

    #[test]
    fn rmt_loss_examples() {
        let cov = Mat::from_fn(4, 4, |i, j| if i == j { [5.0, 1.0, 1.0, 1.0][i] } else { 0.0 });
        let fit = RmtFit {
            basis: Mat::from_fn(4, 1, |i, _| if i == 0 { 1.0 } else { 0.0 }),
            signal_eigs: vec![4.0],
            sigma2: 1.0,
            loss: 0.0,
            negative_signal: false,
        };
        assert_eq!(rmt_loss(cov.as_ref(), &fit).unwrap(), 0.0);
        let small = Mat::<f64>::zeros(3, 3);
        assert!(matches!(rmt_loss(small.as_ref(), &fit), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rmt_loss_matches_elementwise_sum() {
        let mut rng = rng_from_seed(21);
        let a = Mat::from_fn(4, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let cov = Mat::from_fn(4, 4, |i, j| a[(i, j)] + a[(j, i)]);
        let u = random_orthonormal_frame(4, 2, &mut rng);
        let fit = RmtFit { basis: u.clone(), signal_eigs: vec![1.3, 0.4], sigma2: 0.7, loss: 0.0, negative_signal: false };
        // brute force: Σ_ij (C_ij − Σ_k u_ik λ_k u_jk − σ²δ_ij)²
        let mut want = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let mut model = if i == j { 0.7 } else { 0.0 };
                model += u[(i, 0)] * 1.3 * u[(j, 0)] + u[(i, 1)] * 0.4 * u[(j, 1)];
                want += (cov[(i, j)] - model).powi(2);
            }
        }
        assert!((rmt_loss(cov.as_ref(), &fit).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn fit_diagonal_and_isotropic() {
        let cov = Mat::from_fn(4, 4, |i, j| if i == j { [5.0, 1.0, 1.0, 1.0][i] } else { 0.0 });
        let fit = fit_rmt_decomposition(cov.as_ref(), 1).unwrap();
        assert!((fit.signal_eigs[0] - 4.0).abs() < 1e-12);
        assert!((fit.sigma2 - 1.0).abs() < 1e-12);
        assert!(fit.loss < 1e-20);
        assert!((fit.basis[(0, 0)] - 1.0).abs() < 1e-12);

        let iso = Mat::from_fn(5, 5, |i, j| if i == j { 2.5 } else { 0.0 });
        let fit = fit_rmt_decomposition(iso.as_ref(), 1).unwrap();
        assert!(fit.signal_eigs[0].abs() < 1e-12);
        assert!((fit.sigma2 - 2.5).abs() < 1e-12);
        assert!(fit.loss < 1e-20);
        assert!(!fit.negative_signal);
        assert!(matches!(fit_rmt_decomposition(iso.as_ref(), 5), Err(Error::Domain(_))));
        assert!(matches!(fit_rmt_decomposition(iso.as_ref(), 0), Err(Error::Domain(_))));
    }

    #[test]
    fn fit_basis_is_orthonormal() {
        let mut rng = rng_from_seed(4);
        let x = Mat::from_fn(30, 6, |_, _| rng.sample::<f64, _>(StandardNormal));
        let cov = linalg::scaled_gram(x.as_ref(), 1.0 / 30.0);
        let fit = fit_rmt_decomposition(cov.as_ref(), 3).unwrap();
        assert!(linalg::orthonormality_defect(fit.basis.as_ref()) < 1e-10);
        assert!(fit.loss >= 0.0);
    }

    #[test]
    fn wigner_is_symmetric_and_deterministic() {
        let a = sample_wigner(20, 1.5, 3).unwrap();
        let b = sample_wigner(20, 1.5, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_wigner(20, 1.5, 4).unwrap());
        for i in 0..20 {
            for j in 0..20 {
                assert_eq!(a[(i, j)], a[(j, i)]);
            }
        }
        assert!(matches!(sample_wigner(1, 1.0, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn spiked_dataset_is_deterministic() {
        let a = sample_spiked_dataset(50, 10, &[5.0, 3.0], 1.0, 9).unwrap();
        let b = sample_spiked_dataset(50, 10, &[5.0, 3.0], 1.0, 9).unwrap();
        assert_eq!(a, b);
        assert!(linalg::orthonormality_defect(a.frame.as_ref()) < 1e-12);
        assert!(matches!(sample_spiked_dataset(50, 2, &[5.0, 3.0], 1.0, 9), Err(Error::Domain(_))));
        assert!(matches!(sample_spiked_dataset(50, 5, &[-1.0], 1.0, 9), Err(Error::Domain(_))));
    }

    #[test]
    fn spiked_population_covariance_has_planted_spectrum() {
        let d = sample_spiked_dataset(4, 6, &[7.0, 3.0], 0.5, 1).unwrap();
        let ev = symmetric_eigenvalues(d.population_covariance().as_ref()).unwrap();
        let want = [7.0, 3.0, 0.5, 0.5, 0.5, 0.5];
        assert!(ev.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12), "{ev:?}");
    }
}
