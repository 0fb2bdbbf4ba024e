//! `eshield`: simulate spectral laws, calibrate and apply the causal-subspace
//! filter, run the validation suites, and compute evaluation metrics.
//!
//! Exit codes: 0 success, 1 validation failure, 2 input error,
//! 3 numeric or calibration failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eigenshield::defense::FilterMode;
use eigenshield::validation::Suite;
use eigenshield::{Error, Execution};

#[derive(Parser)]
#[command(name = "eshield", version, about = "Random-matrix spectral defense toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo check of a spectral law; writes a JSON report.
    Simulate {
        #[command(subcommand)]
        kind: SimulateKind,
    },
    /// Calibrate the causal eigenvalue threshold on validation data.
    Calibrate {
        /// Stacked validation inputs (ESMX or CSV with header).
        #[arg(long)]
        data: PathBuf,
        /// JSON run configuration; missing fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Calibration artifact to write.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Project inputs onto their causal subspace.
    Filter {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        calib: PathBuf,
        /// Filtered matrix to write (CSV when the name ends in .csv).
        #[arg(long)]
        out: PathBuf,
        /// Per-input reports; defaults to `<out>.reports.json`.
        #[arg(long)]
        reports: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        rows_per_input: Option<usize>,
    },
    /// Run an acceptance suite; exits 1 if any check fails.
    Validate {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// JSON summary to write (also printed when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluation metrics from indicator or joint-table files.
    Metrics {
        #[arg(value_enum)]
        kind: MetricKind,
        #[arg(long)]
        input: PathBuf,
    },
    /// Generate a synthetic validation set as one stacked matrix.
    Synth {
        #[arg(long, value_enum, default_value = "three-spikes")]
        kind: SynthKind,
        #[arg(long, default_value_t = 200)]
        inputs: usize,
        #[arg(long, default_value_t = 256)]
        rows_per_input: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum SimulateKind {
    /// Pure-noise sample covariance vs the Marchenko–Pastur edges.
    Mp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        #[command(flatten)]
        common: SimCommon,
    },
    /// Normalised Wigner spectrum vs the semicircle.
    Wigner {
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[command(flatten)]
        common: SimCommon,
    },
    /// Planted spikes vs their predicted outlier locations.
    Spike {
        /// Spike-to-noise ratios (repeat or comma-separate).
        #[arg(long, required = true, value_delimiter = ',')]
        beta: Vec<f64>,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        #[command(flatten)]
        common: SimCommon,
    },
}

#[derive(Args)]
struct SimCommon {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    rows_per_input: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    PerInput,
    Global,
}

impl From<ModeArg> for FilterMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::PerInput => FilterMode::PerInput,
            ModeArg::Global => FilterMode::Global,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricKind {
    Asr,
    Mi,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    ThreeSpikes,
    CausalSpurious,
    Noise,
}

/// A failed command: its exit code and message.
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Numeric(_) | Error::Calibration(_) | Error::EmptySubspace => 3,
            _ => 2,
        };
        let message = match &e {
            Error::Calibration(f) => format!("{e}\npooled spectrum: {:?}", f.spectrum),
            _ => e.to_string(),
        };
        Self { code, message }
    }
}

fn execution_from_env() -> Result<Execution, Failure> {
    let Ok(raw) = std::env::var("ESHIELD_THREADS") else {
        return Ok(Execution::Parallel);
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| Failure::input(format!("ESHIELD_THREADS must be a positive integer, got '{raw}'")))?;
    eigenshield::par::init_thread_pool(threads).map_err(Failure::input)?;
    Ok(if threads == 1 { Execution::Sequential } else { Execution::Parallel })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let exec = execution_from_env()?;
    match cli.command {
        Command::Simulate { kind } => match kind {
            SimulateKind::Mp { n, p, sigma2, common } => commands::simulate_mp(n, p, sigma2, common.seed, common.out),
            SimulateKind::Wigner { p, sigma, common } => commands::simulate_wigner(p, sigma, common.seed, common.out),
            SimulateKind::Spike { beta, c, n, sigma2, common } => {
                commands::simulate_spike(&beta, c, n, sigma2, common.seed, common.out)
            }
        },
        Command::Calibrate { data, config, out, overrides } => {
            let mut cfg = commands::load_run_config(config.as_deref())?;
            if let Some(s) = overrides.seed {
                cfg.seed = s;
            }
            if let Some(g) = overrides.gamma {
                cfg.gamma = g;
            }
            if let Some(r) = overrides.rows_per_input {
                cfg.rows_per_input = r;
            }
            commands::calibrate(&data, cfg, &out, exec)
        }
        Command::Filter { data, calib, out, reports, config, mode, rows_per_input } => {
            let mut cfg = commands::load_run_config(config.as_deref())?;
            if let Some(m) = mode {
                cfg.mode = m.into();
            }
            if let Some(r) = rows_per_input {
                cfg.rows_per_input = r;
            }
            let reports = reports.unwrap_or_else(|| {
                let mut name = out.clone().into_os_string();
                name.push(".reports.json");
                name.into()
            });
            commands::filter(&data, &calib, &out, &reports, cfg)
        }
        Command::Validate { suite, seed, out } => {
            let suite: Suite = suite.parse().map_err(|e: Error| Failure::input(e.to_string()))?;
            commands::validate(suite, seed, out, exec)
        }
        Command::Metrics { kind, input } => match kind {
            MetricKind::Asr => commands::metrics_asr(&input),
            MetricKind::Mi => commands::metrics_mi(&input),
        },
        Command::Synth { kind, inputs, rows_per_input, seed, out } => {
            commands::synth(kind, inputs, rows_per_input, seed, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("eshield: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
