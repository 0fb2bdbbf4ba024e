//! Robustness-based nonconformity scoring of outlier directions.
//!
//! For each outlier direction `v_j` of the pooled spectrum, every input
//! contributes `u_ij = ⟨v_{x_i, j}, v_j⟩`, the overlap between its own rank-`j`
//! eigenvector and `v_j`. A conditional density of input features given
//! `u_ij` is trained on K−1 folds and scored on the held-out fold by KL
//! divergence. The spread between the median and the lower `q`-quantile of
//! those K scores is `ρ_j`; `α_j = exp(ρ_j)` is the nonconformity score.
//! Directions whose `α_j` falls at or below the `γ`-quantile `t̂` are causal,
//! and `τ*` is the smallest eigenvalue among them.

pub mod density;
pub mod folds;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

pub use density::{
    diagonal_moments, gaussian_kl, kl_performance, train_density, DensityEstimator, GaussianPrediction,
    TrainingConfig,
};
pub use folds::{make_folds, FoldPlan, DEFAULT_FOLDS};

use crate::error::{CalibrationFailure, CalibrationFailureKind, Error, Result};
use crate::linalg;
use crate::par::{try_map_range, Execution};
use crate::rng::derive_seed;
use crate::spectral::SpectralDecomposition;

/// Default lower quantile level for the robustness statistic.
pub const DEFAULT_LOWER_QUANTILE: f64 = 0.10;
/// Default coverage level for the nonconformity threshold.
pub const DEFAULT_GAMMA: f64 = 0.75;

const UNIT_TOL: f64 = 1e-9;

/// Per-input overlaps with one outlier direction.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionProjection {
    pub direction_index: usize,
    /// `values[i] = u_ij`.
    pub values: Vec<f64>,
    pub direction: Vec<f64>,
}

/// Overlap of each input's rank-`j` eigenvector with the `j`-th outlier direction.
///
/// `outlier_directions[j]` is matched to eigenvector `j` of every input
/// (rank-index matching, canonical signs).
pub fn project_directions(
    decomps: &[SpectralDecomposition],
    outlier_directions: &[Vec<f64>],
) -> Result<Vec<DirectionProjection>> {
    let p = match decomps.first() {
        Some(d) => d.dim(),
        None => return Err(Error::Degenerate("no input decompositions".into())),
    };
    if let Some(d) = decomps.iter().find(|d| d.dim() != p) {
        return Err(Error::DimensionMismatch { expected: p, found: d.dim() });
    }
    outlier_directions
        .iter()
        .enumerate()
        .map(|(j, v)| {
            if j >= p {
                return Err(Error::Domain(format!("direction rank {j} exceeds dimension {p}")));
            }
            if v.len() != p {
                return Err(Error::DimensionMismatch { expected: p, found: v.len() });
            }
            let nrm = linalg::norm(v);
            if (nrm - 1.0).abs() > UNIT_TOL {
                return Err(Error::Contract(format!("direction {j} is not unit-norm ({nrm})")));
            }
            let values = decomps
                .iter()
                .map(|d| {
                    let e = d.eigenvectors.as_ref();
                    (0..p).map(|i| e[(i, j)] * v[i]).sum::<f64>().clamp(-1.0, 1.0)
                })
                .collect();
            Ok(DirectionProjection { direction_index: j, values, direction: v.clone() })
        })
        .collect()
}

/// Type-7 quantile of already ascending-sorted data: linear interpolation at `h = (n−1)·q`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    // Equal neighbours (including two infinite scores) need no interpolation.
    if frac == 0.0 || sorted[lo] == sorted[hi] {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Type-7 quantile of unsorted data.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Degenerate("quantile of an empty sequence".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("quantile level must be in [0, 1], got {q}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q))
}

/// `median − quantile_q` of the fold performances (both type-7).
pub fn robustness_statistic(performances: &[f64], q: f64) -> Result<f64> {
    if performances.is_empty() {
        return Err(Error::Degenerate("no fold performances".into()));
    }
    if performances.len() < 2 {
        return Err(Error::Degenerate("robustness statistic needs at least 2 folds".into()));
    }
    if !(0.0..=0.5).contains(&q) {
        return Err(Error::Domain(format!("lower quantile level must be in [0, 0.5], got {q}")));
    }
    let mut sorted = performances.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rho = quantile_sorted(&sorted, 0.5) - quantile_sorted(&sorted, q);
    Ok(rho.max(0.0))
}

/// `α = e^ρ`.
pub fn nonconformity(rho: f64) -> f64 {
    rho.exp()
}

/// Type-7 `γ`-quantile of the nonconformity scores.
pub fn quantile_threshold(alphas: &[f64], gamma: f64) -> Result<f64> {
    quantile(alphas, gamma)
}

/// Fold performances and scores for one direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbnsRecord {
    pub direction_index: usize,
    /// `Perf_{j,k}` in nats, fold order.
    pub performances: Vec<f64>,
    pub rho: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalSelection {
    pub tau_star: f64,
    /// Positions (into the record list) with `α ≤ t̂`, ascending.
    pub causal: Vec<usize>,
}

/// `S = {j : α_j ≤ t̂}` and `τ* = min_{j∈S} λ_j`.
pub fn causal_eigenvalue_threshold(
    records: &[RbnsRecord],
    outlier_eigenvalues: &[f64],
    t_hat: f64,
) -> Result<CausalSelection> {
    if records.len() != outlier_eigenvalues.len() {
        return Err(Error::DimensionMismatch {
            expected: records.len(),
            found: outlier_eigenvalues.len(),
        });
    }
    let causal: Vec<usize> =
        records.iter().enumerate().filter(|(_, r)| r.alpha <= t_hat).map(|(j, _)| j).collect();
    if causal.is_empty() {
        return Err(Error::Calibration(CalibrationFailure {
            kind: CalibrationFailureKind::EmptyCausalSet,
            spectrum: outlier_eigenvalues.to_vec(),
            lambda_plus: None,
            alphas: records.iter().map(|r| r.alpha).collect(),
            t_hat: Some(t_hat),
        }));
    }
    let tau_star = causal.iter().map(|&j| outlier_eigenvalues[j]).fold(f64::INFINITY, f64::min);
    Ok(CausalSelection { tau_star, causal })
}

/// Settings for [`score_directions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    pub lower_quantile: f64,
    pub training: TrainingConfig,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self { lower_quantile: DEFAULT_LOWER_QUANTILE, training: TrainingConfig::default() }
    }
}

fn select_rows(m: MatRef<'_, f64>, rows: &[usize]) -> Mat<f64> {
    Mat::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

/// Cross-validated performance of direction `projection` on fold `fold`.
pub fn fold_performance(
    projection: &DirectionProjection,
    features: MatRef<'_, f64>,
    plan: &FoldPlan,
    fold: usize,
    training: TrainingConfig,
) -> Result<f64> {
    let train = plan.training(fold);
    let test = plan.held_out(fold);
    let u_train: Vec<f64> = train.iter().map(|&i| projection.values[i]).collect();
    let u_test: Vec<f64> = test.iter().map(|&i| projection.values[i]).collect();
    let est = train_density(&u_train, select_rows(features, &train).as_ref(), training)?;
    kl_performance(&est, &u_test, select_rows(features, &test).as_ref())
}

/// Scores every direction over every fold.
///
/// The estimator for fold `k` starts from the seed `derive_seed(training.seed, k)`
/// for all directions, so directions differ only in their projections. Tasks
/// run in parallel and are gathered in `(j, k)` order.
pub fn score_directions(
    projections: &[DirectionProjection],
    features: MatRef<'_, f64>,
    plan: &FoldPlan,
    config: ScoringConfig,
    exec: Execution,
) -> Result<Vec<RbnsRecord>> {
    let n = features.nrows();
    if plan.sample_count() != n {
        return Err(Error::DimensionMismatch { expected: n, found: plan.sample_count() });
    }
    if let Some(p) = projections.iter().find(|p| p.values.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: p.values.len() });
    }
    let k = plan.fold_count;
    let perfs = try_map_range(exec, projections.len() * k, |task| {
        let (j, fold) = (task / k, task % k);
        let training =
            TrainingConfig { seed: derive_seed(config.training.seed, fold as u64), ..config.training };
        fold_performance(&projections[j], features, plan, fold, training)
    })?;
    projections
        .iter()
        .zip(perfs.chunks(k))
        .map(|(proj, chunk)| {
            let rho = robustness_statistic(chunk, config.lower_quantile)?;
            Ok(RbnsRecord {
                direction_index: proj.direction_index,
                performances: chunk.to_vec(),
                rho,
                alpha: nonconformity(rho),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::symmetric_eig;
    use proptest::prelude::*;

    fn record(alpha: f64) -> RbnsRecord {
        RbnsRecord { direction_index: 0, performances: vec![], rho: alpha.ln(), alpha }
    }

    #[test]
    fn robustness_examples() {
        assert_eq!(robustness_statistic(&[0.7; 10], 0.1).unwrap(), 0.0);
        let perf: Vec<f64> = (1..=10).map(f64::from).collect();
        let sorted = perf.clone();
        assert!((quantile_sorted(&sorted, 0.5) - 5.5).abs() < 1e-12);
        assert!((quantile_sorted(&sorted, 0.1) - 1.9).abs() < 1e-12);
        assert!((robustness_statistic(&perf, 0.1).unwrap() - 3.6).abs() < 1e-12);
        assert!(matches!(robustness_statistic(&[], 0.1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn nonconformity_examples() {
        assert_eq!(nonconformity(0.0), 1.0);
        assert!((nonconformity(2f64.ln()) - 2.0).abs() < 1e-15);
        assert!(nonconformity(0.3) < nonconformity(0.31));
    }

    #[test]
    fn quantile_threshold_examples() {
        assert!((quantile_threshold(&[1.0, 2.0, 3.0, 4.0], 0.75).unwrap() - 3.25).abs() < 1e-15);
        assert_eq!(quantile_threshold(&[3.0, 1.0, 2.0], 1.0).unwrap(), 3.0);
        assert_eq!(quantile_threshold(&[3.0, 1.0, 2.0], 0.0).unwrap(), 1.0);
        for g in [0.0, 0.3, 0.75, 1.0] {
            assert_eq!(quantile_threshold(&[1.7; 5], g).unwrap(), 1.7);
        }
        assert!(matches!(quantile_threshold(&[], 0.5), Err(Error::Degenerate(_))));
    }

    #[test]
    fn causal_threshold_examples() {
        let recs: Vec<_> = [1.1, 1.5, 2.0, 3.0].into_iter().map(record).collect();
        let sel = causal_eigenvalue_threshold(&recs, &[9.0, 7.0, 5.0, 3.0], 1.5).unwrap();
        assert_eq!(sel.causal, vec![0, 1]);
        assert_eq!(sel.tau_star, 7.0);

        let same: Vec<_> = [1.2; 3].into_iter().map(record).collect();
        let sel = causal_eigenvalue_threshold(&same, &[6.0, 4.0, 2.5], 1.2).unwrap();
        assert_eq!(sel.causal, vec![0, 1, 2]);
        assert_eq!(sel.tau_star, 2.5);

        match causal_eigenvalue_threshold(&recs, &[9.0, 7.0, 5.0, 3.0], 1.0) {
            Err(Error::Calibration(f)) => {
                assert_eq!(f.kind, CalibrationFailureKind::EmptyCausalSet);
                assert_eq!(f.alphas.len(), 4);
            }
            other => panic!("expected calibration failure, got {other:?}"),
        }
    }

    fn decomposition(seed: u64, p: usize) -> SpectralDecomposition {
        use rand::Rng as _;
        let mut rng = crate::rng::rng_from_seed(seed);
        let a = Mat::from_fn(p, p, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        let s = Mat::from_fn(p, p, |i, j| a[(i, j)] + a[(j, i)]);
        symmetric_eig(s.as_ref()).unwrap()
    }

    #[test]
    fn self_projection_is_one() {
        let d = decomposition(1, 5);
        let dirs = vec![d.eigenvector(0), d.eigenvector(1)];
        let proj = project_directions(&[d.clone(), d.clone(), d], &dirs).unwrap();
        for p in &proj {
            assert!(p.values.iter().all(|u| (u - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn orthogonal_direction_projects_to_zero() {
        let d = decomposition(2, 4);
        // v_0 orthogonal to every input's rank-0 eigenvector: use their rank-3 vector.
        let proj = project_directions(&[d.clone(), d.clone()], &[d.eigenvector(3)]).unwrap();
        assert!(proj[0].values.iter().all(|u| u.abs() < 1e-12));
    }

    #[test]
    fn projection_errors() {
        let d = decomposition(3, 3);
        let dirs = vec![vec![1.0, 0.0, 0.0]; 4];
        assert!(matches!(project_directions(&[d.clone()], &dirs), Err(Error::Domain(_))));
        assert!(matches!(project_directions(&[d.clone()], &[vec![2.0, 0.0, 0.0]]), Err(Error::Contract(_))));
        assert!(matches!(project_directions(&[d], &[vec![1.0, 0.0]]), Err(Error::DimensionMismatch { .. })));
    }

    proptest! {
        #[test]
        fn rho_non_negative(perf in prop::collection::vec(0.0f64..50.0, 2..20), q in 0.0f64..0.5) {
            let rho = robustness_statistic(&perf, q).unwrap();
            prop_assert!(rho >= 0.0);
            prop_assert!(nonconformity(rho) >= 1.0);
        }

        #[test]
        fn quantile_monotone_in_gamma(alphas in prop::collection::vec(1.0f64..20.0, 1..12), g1 in 0.0f64..=1.0, g2 in 0.0f64..=1.0) {
            let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            prop_assert!(quantile_threshold(&alphas, lo).unwrap() <= quantile_threshold(&alphas, hi).unwrap());
        }

        #[test]
        fn higher_gamma_never_shrinks_causal_set(alphas in prop::collection::vec(1.0f64..5.0, 1..10), g1 in 0.0f64..=1.0, g2 in 0.0f64..=1.0) {
            let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            let recs: Vec<_> = alphas.iter().map(|&a| record(a)).collect();
            let eig: Vec<f64> = (0..alphas.len()).map(|i| 10.0 - i as f64).collect();
            let a = causal_eigenvalue_threshold(&recs, &eig, quantile_threshold(&alphas, lo).unwrap()).unwrap();
            let b = causal_eigenvalue_threshold(&recs, &eig, quantile_threshold(&alphas, hi).unwrap()).unwrap();
            prop_assert!(a.causal.iter().all(|j| b.causal.contains(j)));
            prop_assert!(a.tau_star >= b.tau_star);
        }
    }
}
