use std::path::{Path, PathBuf};

use eigenshield::defense::{
    calibrate_with_diagnostics, filter_input, load_calibration, save_calibration, FilterReport, Input, RunConfig,
};
use eigenshield::io::{read_matrix_any, write_atomic, write_matrix_any};
use eigenshield::metrics::{
    attack_success_rate, conditional_entropy, entropy, mutual_information, parse_indicators, parse_joint_table,
};
use eigenshield::simulate::{simulate_mp as sim_mp, simulate_spike as sim_spike, simulate_wigner as sim_wigner, SimulationReport};
use eigenshield::spectral::SampleMatrix;
use eigenshield::synth::{split_inputs, stack_inputs, validation_set, ValidationSetSpec};
use eigenshield::validation::{run_suite, Suite, ValidationOptions};
use eigenshield::{Error, Execution, Mat};
use serde::Serialize;
use serde_json::json;

use crate::{Failure, SynthKind};

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("reports contain only finite numbers");
    bytes.push(b'\n');
    bytes
}

fn emit(value: &serde_json::Value, out: Option<&Path>) -> Result<(), Failure> {
    let bytes = to_json(value);
    match out {
        Some(path) => Ok(write_atomic(path, &bytes)?),
        None => {
            print!("{}", String::from_utf8_lossy(&bytes));
            Ok(())
        }
    }
}

fn simulation(kind: &str, params: serde_json::Value, report: SimulationReport, out: Option<PathBuf>) -> Result<(), Failure> {
    emit(&json!({ "command": "simulate", "kind": kind, "config": params, "report": report }), out.as_deref())
}

pub fn simulate_mp(n: usize, p: usize, sigma2: f64, seed: u64, out: Option<PathBuf>) -> Result<(), Failure> {
    let report = sim_mp(n, p, sigma2, seed)?;
    simulation("mp", json!({ "n": n, "p": p, "sigma2": sigma2, "seed": seed }), report, out)
}

pub fn simulate_wigner(p: usize, sigma: f64, seed: u64, out: Option<PathBuf>) -> Result<(), Failure> {
    let report = sim_wigner(p, sigma, seed)?;
    simulation("wigner", json!({ "p": p, "sigma": sigma, "seed": seed }), report, out)
}

pub fn simulate_spike(betas: &[f64], c: f64, n: usize, sigma2: f64, seed: u64, out: Option<PathBuf>) -> Result<(), Failure> {
    let report = sim_spike(n, c, betas, sigma2, seed)?;
    simulation("spike", json!({ "beta": betas, "c": c, "n": n, "sigma2": sigma2, "seed": seed }), report, out)
}

pub fn load_run_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    let cfg = match path {
        None => RunConfig::default(),
        Some(p) => {
            let bytes = std::fs::read(p).map_err(Error::from)?;
            serde_json::from_slice(&bytes)
                .map_err(|e| Failure::input(format!("config {}: {e}", p.display())))?
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

fn read_inputs(path: &Path, rows_per_input: usize) -> Result<Vec<SampleMatrix>, Failure> {
    let m = read_matrix_any(path)?;
    Ok(split_inputs(&m, rows_per_input)?)
}

pub fn calibrate(data: &Path, cfg: RunConfig, out: &Path, exec: Execution) -> Result<(), Failure> {
    cfg.validate()?;
    let inputs = read_inputs(data, cfg.rows_per_input)?;
    let (calib, diag) = calibrate_with_diagnostics(&inputs, cfg.gamma, &cfg.calibration_config(exec))?;
    save_calibration(&calib, out)?;
    println!("tau* = {}", calib.tau_star);
    println!("t_hat = {}", calib.t_hat);
    println!("outliers = {}", calib.outlier_directions.len());
    println!("causal = {}", calib.causal_count());
    println!("lambda+ = {} (pooled rows {})", calib.mp_model.lambda_plus, diag.pooled_rows);
    println!("config = {}", serde_json::to_string(&cfg).expect("config serializes"));
    Ok(())
}

pub fn filter(data: &Path, calib_path: &Path, out: &Path, reports_path: &Path, cfg: RunConfig) -> Result<(), Failure> {
    let calib = load_calibration(calib_path).map_err(|e| match e {
        // A bad artifact is an input problem whatever went wrong inside it.
        Error::Numeric(m) => Failure::input(m),
        other => other.into(),
    })?;
    let inputs = read_inputs(data, cfg.rows_per_input)?;
    let mut outputs = Vec::with_capacity(inputs.len());
    let mut reports: Vec<FilterReport> = Vec::with_capacity(inputs.len());
    for (i, sample) in inputs.into_iter().enumerate() {
        let filtered = filter_input(format!("input-{i}"), &Input::Samples(sample), &calib, cfg.mode)?;
        let Input::Samples(s) = filtered.output else { unreachable!("sample inputs stay samples") };
        outputs.push(s);
        reports.push(filtered.report);
    }
    let stacked: Mat<f64> = stack_inputs(&outputs);
    write_matrix_any(out, &stacked)?;
    let passthrough = reports.iter().filter(|r| r.passthrough).count();
    emit(
        &json!({ "command": "filter", "config": cfg, "tau_star": calib.tau_star, "reports": reports }),
        Some(reports_path),
    )?;
    println!("filtered {} inputs ({passthrough} passthrough) -> {}", reports.len(), out.display());
    Ok(())
}

pub fn validate(suite: Suite, seed: u64, out: Option<PathBuf>, exec: Execution) -> Result<(), Failure> {
    let opts = ValidationOptions { seed, execution: exec };
    let results = run_suite(suite, &opts, |r| {
        println!(
            "[{}] {:>3} {} | measured {:.6} bound {:.6} margin {:+.6} | {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.measured,
            r.bound,
            r.margin,
            r.detail
        );
    });
    let failed = results.iter().filter(|r| !r.passed).count();
    let summary = json!({
        "command": "validate",
        "config": { "suite": suite, "seed": seed, "execution": exec },
        "passed": results.len() - failed,
        "failed": failed,
        "checks": results,
    });
    match out {
        Some(path) => emit(&summary, Some(&path))?,
        None => emit(&summary, None)?,
    }
    if failed > 0 {
        return Err(Failure::validation(format!("{failed} of {} checks failed", results.len())));
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

pub fn metrics_asr(input: &Path) -> Result<(), Failure> {
    let indicators = parse_indicators(&read_text(input)?)?;
    let asr = attack_success_rate(&indicators);
    println!("ASR = {asr} (fraction of {} examples)", indicators.len());
    emit(&json!({ "command": "metrics", "metric": "asr", "value": asr, "units": "fraction", "count": indicators.len() }), None)
}

pub fn metrics_mi(input: &Path) -> Result<(), Failure> {
    let table = parse_joint_table(&read_text(input)?)?;
    let mi = mutual_information(&table);
    let hx = entropy(&table.marginal_x())?;
    let hxu = conditional_entropy(&table);
    println!("I(X;U) = {mi} bits (H(X) = {hx}, H(X|U) = {hxu})");
    emit(
        &json!({ "command": "metrics", "metric": "mi", "value": mi, "units": "bits",
                 "entropy_x": hx, "conditional_entropy": hxu }),
        None,
    )
}

pub fn synth(kind: SynthKind, inputs: usize, rows_per_input: usize, seed: u64, out: &Path) -> Result<(), Failure> {
    let mut spec = match kind {
        SynthKind::ThreeSpikes => ValidationSetSpec::three_spikes(inputs, seed),
        SynthKind::CausalSpurious => ValidationSetSpec::causal_and_spurious(inputs, seed),
        SynthKind::Noise => ValidationSetSpec { causal_spikes: vec![], ..ValidationSetSpec::three_spikes(inputs, seed) },
    };
    spec.rows_per_input = rows_per_input;
    let set = validation_set(&spec)?;
    write_matrix_any(out, &stack_inputs(&set.inputs))?;
    println!("{} inputs x {} rows x {} dims -> {}", inputs, rows_per_input, spec.dim, out.display());
    Ok(())
}
