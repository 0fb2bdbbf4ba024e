//! Decomposition, projection and patch-geometry properties.

use eigenshield::rmt::sample_spiked_dataset;
use eigenshield::spectral::{
    build_projector, covariance, patch_matrix, project, project_rows, reassemble, symmetric_eig,
    symmetric_eigenvalues, CausalProjector, Image, SampleMatrix,
};
use eigenshield::Mat;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn symmetric(p: usize, seed: u64) -> Mat<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Mat::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    Mat::from_fn(p, p, |i, j| a[(i, j)] + a[(j, i)])
}

#[test]
fn gaussian_covariance_stays_in_mp_support() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = Mat::from_fn(4000, 1000, |_, _| rng.sample::<f64, _>(StandardNormal));
    let cov = covariance(&SampleMatrix::new(x).unwrap(), true).unwrap();
    let ev = symmetric_eigenvalues(cov.as_ref()).unwrap();
    assert!(ev[0] <= 2.25 * 1.05, "top {}", ev[0]);
    assert!(ev[999] >= 0.25 * 0.95, "bottom {}", ev[999]);
}

#[test]
fn residual_after_removing_planted_frame_is_isotropic_noise() {
    let (n, p) = (8000, 64);
    let spikes = [16.0, 9.0];
    let ds = sample_spiked_dataset(n, p, &spikes, 1.0, 4).unwrap();
    let sample = SampleMatrix::new(ds.data.clone()).unwrap();
    let proj = CausalProjector::from_basis(ds.frame.clone()).unwrap();
    let kept = project_rows(&sample, &proj).unwrap().into_data();
    let residual = &ds.data - &kept;
    // Variance along each planted direction is its spike; every other direction carries σ².
    for (j, &s) in spikes.iter().enumerate() {
        let var: f64 = (0..n)
            .map(|i| (0..p).map(|k| kept[(i, k)] * ds.frame[(k, j)]).sum::<f64>().powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((var - s).abs() / s < 0.05, "direction {j}: {var} vs {s}");
    }
    let total: f64 = (0..n).map(|i| (0..p).map(|k| residual[(i, k)].powi(2)).sum::<f64>()).sum::<f64>();
    let per_direction = total / n as f64 / (p - spikes.len()) as f64;
    assert!((per_direction - 1.0).abs() < 0.05, "residual variance {per_direction}");
}

#[test]
fn random_symmetric_decomposition_reconstructs() {
    for seed in 0..10 {
        let m = symmetric(8, seed);
        let d = symmetric_eig(m.as_ref()).unwrap();
        let r = d.reconstruct();
        let v = &d.eigenvectors;
        let vtv = v.transpose() * v;
        for i in 0..8 {
            assert!(d.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            for j in 0..8 {
                assert!((r[(i, j)] - m[(i, j)]).abs() < 1e-10);
                assert!((vtv[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn image_round_trip_and_filtered_shape() {
    let img = Image::from_fn(16, 24, 3, |y, x, c| (y * 31 + x * 7 + c) as f64 / 10.0);
    let patches = patch_matrix(&img, 4).unwrap();
    assert_eq!((patches.nrows(), patches.ncols()), (24, 48));
    assert_eq!(reassemble(&patches).unwrap(), img);
    let d = symmetric_eig(covariance(&patches, true).unwrap().as_ref()).unwrap();
    let filtered = project_rows(&patches, &build_projector(&d, &[0, 1]).unwrap()).unwrap();
    let out = reassemble(&filtered).unwrap();
    assert_eq!((out.height, out.width, out.channels), (16, 24, 3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_contractive_and_idempotent(
        seed in any::<u64>(),
        p in 3usize..16,
        k_frac in 0.0f64..1.0,
        e in prop::collection::vec(-10.0f64..10.0, 16),
    ) {
        let k = 1 + ((p - 1) as f64 * k_frac) as usize;
        let d = symmetric_eig(symmetric(p, seed).as_ref()).unwrap();
        let idx: Vec<usize> = (0..k).collect();
        let proj = build_projector(&d, &idx).unwrap();
        let e = &e[..p];
        let once = project(e, &proj).unwrap();
        let twice = project(&once, &proj).unwrap();
        prop_assert!(norm(&once) <= norm(e) + 1e-12);
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let pm = proj.matrix();
        let trace: f64 = (0..p).map(|i| pm[(i, i)]).sum();
        prop_assert!((trace - k as f64).abs() < 1e-8);
    }
}
