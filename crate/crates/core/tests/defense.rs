//! Calibration and filtering end to end.

use std::sync::OnceLock;

use eigenshield::defense::{
    calibrate, calibrate_inputs, decode_calibration, encode_calibration, filter_input, load_calibration,
    save_calibration, CalibrationConfig, CalibrationResult, FilterMode, Input,
};
use eigenshield::error::CalibrationFailureKind;
use eigenshield::rmt::sample_spiked_dataset;
use eigenshield::rng::replica_seed;
use eigenshield::spectral::{symmetric_eigenvalues, Image, SampleMatrix};
use eigenshield::synth::{validation_set, ValidationSetSpec};
use eigenshield::{Error, Execution, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn three_spike_inputs(inputs: usize, seed: u64) -> Vec<SampleMatrix> {
    validation_set(&ValidationSetSpec::three_spikes(inputs, seed)).unwrap().inputs
}

/// One calibration on three planted spikes, shared by the filtering tests.
fn shared() -> &'static CalibrationResult {
    static CALIB: OnceLock<CalibrationResult> = OnceLock::new();
    CALIB.get_or_init(|| {
        calibrate(&three_spike_inputs(40, 1), 1.0, &CalibrationConfig { seed: 1, ..Default::default() }).unwrap()
    })
}

fn samples(input: &Input) -> Mat<f64> {
    match input {
        Input::Samples(s) => s.data().to_owned(),
        Input::Image(_) => panic!("expected samples"),
    }
}

fn noise(n: usize, p: usize, seed: u64) -> Mat<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Mat::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn rel_change(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            num += (a[(i, j)] - b[(i, j)]).powi(2);
            den += a[(i, j)].powi(2);
        }
    }
    (num / den).sqrt()
}

#[test]
fn tau_star_admits_all_planted_spikes() {
    // γ = 1: with three outliers any γ < 1 admits at most two by the quantile rule.
    let mut hits = 0;
    for t in 0..20 {
        let seed = replica_seed(13, t);
        let inputs = three_spike_inputs(200, seed);
        let calib = calibrate(&inputs, 1.0, &CalibrationConfig { seed, ..Default::default() }).unwrap();
        let smallest_planted = calib.outlier_directions.get(2).map_or(f64::NAN, |d| d.eigenvalue);
        let ok = calib.outlier_directions.len() == 3
            && calib.tau_star <= smallest_planted
            && calib.tau_star > calib.mp_model.lambda_plus;
        hits += usize::from(ok);
    }
    assert!(hits >= 18, "{hits}/20 seeds");
}

#[test]
fn gamma_one_admits_every_outlier() {
    let calib = shared();
    assert_eq!(calib.causal_count(), calib.outlier_directions.len());
    let min = calib.outlier_directions.iter().map(|d| d.eigenvalue).fold(f64::INFINITY, f64::min);
    assert_eq!(calib.tau_star, min);
    assert!(calib.tau_star > calib.mp_model.lambda_plus);
    for d in &calib.outlier_directions {
        assert!(d.alpha >= 1.0);
        assert!((d.vector.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn calibration_is_byte_identical_and_execution_independent() {
    let inputs = three_spike_inputs(24, 2);
    let seq = CalibrationConfig { seed: 2, execution: Execution::Sequential, ..Default::default() };
    let par = CalibrationConfig { execution: Execution::Parallel, ..seq };
    let a = encode_calibration(&calibrate(&inputs, 0.75, &seq).unwrap()).unwrap();
    let b = encode_calibration(&calibrate(&inputs, 0.75, &seq).unwrap()).unwrap();
    let c = encode_calibration(&calibrate(&inputs, 0.75, &par).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn raising_gamma_never_shrinks_the_causal_set() {
    let set = validation_set(&ValidationSetSpec::causal_and_spurious(30, 4)).unwrap();
    let cfg = CalibrationConfig { seed: 4, ..Default::default() };
    let runs: Vec<_> = [0.25, 0.5, 0.75, 1.0].iter().map(|&g| calibrate(&set.inputs, g, &cfg).unwrap()).collect();
    for w in runs.windows(2) {
        let lo: Vec<usize> = w[0].causal_directions().map(|d| d.index).collect();
        let hi: Vec<usize> = w[1].causal_directions().map(|d| d.index).collect();
        assert!(lo.iter().all(|j| hi.contains(j)));
        assert!(w[0].tau_star >= w[1].tau_star);
    }
}

#[test]
fn rejects_invalid_calibration_requests() {
    let inputs = three_spike_inputs(24, 5);
    let cfg = CalibrationConfig::default();
    assert!(matches!(calibrate(&inputs, 0.0, &cfg), Err(Error::Domain(_))));
    assert!(matches!(calibrate(&inputs, 1.5, &cfg), Err(Error::Domain(_))));
    assert!(matches!(calibrate(&inputs[..10], 0.75, &cfg), Err(Error::Degenerate(_))));
}

#[test]
fn pure_noise_has_no_outliers() {
    let inputs: Vec<SampleMatrix> =
        (0..24).map(|i| SampleMatrix::new(noise(256, 64, 100 + i)).unwrap()).collect();
    match calibrate(&inputs, 0.75, &CalibrationConfig::default()) {
        Err(Error::Calibration(f)) => {
            assert_eq!(f.kind, CalibrationFailureKind::NoOutliers);
            assert_eq!(f.spectrum.len(), 64);
        }
        other => panic!("expected a calibration failure, got {other:?}"),
    }
}

#[test]
fn artifact_round_trip_and_corruption() {
    let calib = shared();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("calib.json");
    save_calibration(calib, &path).unwrap();
    assert_eq!(&load_calibration(&path).unwrap(), calib);

    let bytes = std::fs::read(&path).unwrap();
    assert!(matches!(decode_calibration(&bytes[..bytes.len() / 2]), Err(Error::Corrupt(_))));
    let text = String::from_utf8(bytes).unwrap();
    let bumped = text.replacen("\"version\": 1", "\"version\": 2", 1);
    assert_ne!(bumped, text);
    assert!(matches!(decode_calibration(bumped.as_bytes()), Err(Error::VersionMismatch { expected: 1, found: 2 })));
    let renamed = text.replacen("\"gamma\"", "\"gama\"", 1);
    assert!(matches!(decode_calibration(renamed.as_bytes()), Err(Error::Corrupt(_))));
}

#[test]
fn artifact_floats_survive_bit_for_bit() {
    let calib = shared();
    let back = decode_calibration(&encode_calibration(calib).unwrap()).unwrap();
    for (a, b) in calib.outlier_directions.iter().zip(&back.outlier_directions) {
        assert_eq!(a.alpha.to_bits(), b.alpha.to_bits());
        assert!(a.vector.iter().zip(&b.vector).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    assert_eq!(calib.tau_star.to_bits(), back.tau_star.to_bits());
}

#[test]
fn clean_noise_passes_through() {
    let calib = shared();
    let input = Input::Samples(SampleMatrix::new(noise(256, 64, 7)).unwrap());
    for mode in [FilterMode::PerInput] {
        let out = filter_input("noise", &input, calib, mode).unwrap();
        assert!(out.report.passthrough);
        assert_eq!(out.report.retained_rank, 0);
        assert_eq!(out.report.energy_retained, 1.0);
        assert_eq!(out.output, input);
    }
}

#[test]
fn single_spike_is_kept_as_a_rank_one_subspace() {
    let calib = shared();
    let ds = sample_spiked_dataset(256, 64, &[30.0], 1.0, 8).unwrap();
    let input = Input::Samples(SampleMatrix::new(ds.data).unwrap());
    let out = filter_input("spike", &input, calib, FilterMode::PerInput).unwrap();
    assert_eq!(out.report.retained_rank, 1);
    assert!(!out.report.passthrough);
    assert!(out.report.energy_retained > 0.0 && out.report.energy_retained <= 1.0);
    let filtered = samples(&out.output);
    let gram = filtered.transpose() * &filtered;
    let ev = symmetric_eigenvalues(gram.as_ref()).unwrap();
    assert!(ev[1] <= 1e-9 * ev[0], "second singular direction {} vs {}", ev[1], ev[0]);
}

#[test]
fn filtering_twice_changes_nothing() {
    let calib = shared();
    for seed in 0..5 {
        let ds = sample_spiked_dataset(256, 64, &[16.0, 9.0], 1.0, 50 + seed).unwrap();
        let input = Input::Samples(SampleMatrix::new(ds.data).unwrap());
        let once = filter_input("x", &input, calib, FilterMode::PerInput).unwrap();
        let twice = filter_input("x", &once.output, calib, FilterMode::PerInput).unwrap();
        assert!(rel_change(&samples(&once.output), &samples(&twice.output)) < 1e-6);
    }
}

#[test]
fn global_mode_projects_onto_calibrated_directions() {
    let calib = shared();
    let ds = sample_spiked_dataset(256, 64, &[16.0], 1.0, 9).unwrap();
    let input = Input::Samples(SampleMatrix::new(ds.data).unwrap());
    let out = filter_input("g", &input, calib, FilterMode::Global).unwrap();
    assert_eq!(out.report.retained_rank, calib.causal_count());
    let proj = calib.global_projector().unwrap().matrix();
    let x = samples(&out.output);
    let back = &x * &proj;
    assert!(rel_change(&x, &back) < 1e-12);
}

#[test]
fn dimension_mismatch_is_rejected() {
    let input = Input::Samples(SampleMatrix::new(noise(32, 10, 1)).unwrap());
    assert!(matches!(
        filter_input("bad", &input, shared(), FilterMode::PerInput),
        Err(Error::DimensionMismatch { expected: 64, found: 10 })
    ));
}

#[test]
fn images_calibrate_and_filter_through_patches() {
    // 64×64 single-channel images with 8×8 patches → 64 patch rows of dimension 64.
    let set = validation_set(&ValidationSetSpec {
        rows_per_input: 64,
        ..ValidationSetSpec::three_spikes(30, 3)
    })
    .unwrap();
    let to_image = |s: &SampleMatrix| {
        let d = s.data();
        Image::from_fn(64, 64, 1, |y, x, _| {
            let (row, col) = ((y / 8) * 8 + x / 8, (y % 8) * 8 + x % 8);
            d[(row, col)]
        })
    };
    let images: Vec<Input> = set.inputs.iter().map(|s| Input::Image(to_image(s))).collect();
    let calib = calibrate_inputs(&images, 1.0, &CalibrationConfig { seed: 3, ..Default::default() }).unwrap();
    let direct = calibrate(&set.inputs, 1.0, &CalibrationConfig { seed: 3, ..Default::default() }).unwrap();
    assert_eq!(calib, direct);
    let out = filter_input("img", &images[0], &calib, FilterMode::PerInput).unwrap();
    match out.output {
        Input::Image(img) => assert_eq!((img.height, img.width, img.channels), (64, 64, 1)),
        Input::Samples(_) => panic!("image input must come back as an image"),
    }
}
