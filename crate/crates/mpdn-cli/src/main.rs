//! Command-line front end for the mpdn library.
//!
//! Four subcommands cover the library surface: `spectra` prints the
//! deterministic spectral quantities, `denoise` runs one estimator on a
//! matrix file, `simulate` materializes a synthetic instance, and `bench`
//! executes a Monte Carlo experiment config and writes its reports.
//!
//! Exit codes are scriptable: 0 success, 2 usage errors, 3 I/O failures,
//! 4 numeric or data errors.

mod commands;
mod io;
mod manifest;
mod presets;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Failure classes with distinct exit codes. Usage problems that clap
/// itself detects exit with code 2 before reaching command dispatch;
/// `Usage` covers argument values that parse but are invalid.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Data(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Io(msg) => write!(f, "io error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
        }
    }
}

impl From<mpdn::Error> for CliError {
    fn from(err: mpdn::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "mpdn", version, about = "Low-rank matrix denoising toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print spectral quantities: bulk edges, outlier locations, overlap
    /// limits, and detection-statistic samples.
    Spectra(SpectraArgs),
    /// Denoise a matrix file with one estimator and write the estimate
    /// plus a JSON diagnostic.
    Denoise(DenoiseArgs),
    /// Generate a synthetic signal-plus-noise instance from a JSON config.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo experiment config and write its reports.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SpectraArgs {
    /// Aspect ratio N/M of the noise matrix.
    #[arg(long, allow_hyphen_values = true)]
    c: f64,
    /// Signal value(s) to tabulate; repeatable.
    #[arg(long = "d", allow_hyphen_values = true)]
    d: Vec<f64>,
    /// Sample the detection statistic on `min:max:count` above the bulk.
    #[arg(long)]
    grid: Option<String>,
    /// Also write the table to a file (.json or .csv by extension).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DenoiseArgs {
    /// Input matrix: binary .mpdn or plain CSV, detected by content.
    #[arg(long)]
    input: PathBuf,
    /// Estimator to run.
    #[arg(long, value_parser = ["stepwise", "rie", "tsvd"])]
    method: String,
    /// Noise level: a positive number, or `auto` to estimate it from the
    /// first non-outlier singular value.
    #[arg(long, default_value = "1.0")]
    sigma: String,
    /// Stepwise fallback threshold exponent in n^(-1/2 + delta1).
    #[arg(long)]
    delta1: Option<f64>,
    /// Stepwise separation guard; the cluster split is trusted only when
    /// its smallest member is at least tau_sep/sqrt(n).
    #[arg(long)]
    tau_sep: Option<f64>,
    /// Stepwise gate mode: re-run outlier detection on each residual, or
    /// trust the initial count.
    #[arg(long, value_parser = ["redetect", "fixed-q"])]
    gate: Option<String>,
    /// TSVD variant as `rank:K`, `hard:GAMMA`, or `soft:GAMMA`.
    #[arg(long)]
    tsvd_mode: Option<String>,
    /// Estimate file format: lossless binary or full-precision CSV.
    #[arg(long, default_value = "mpdn", value_parser = ["mpdn", "csv"])]
    format: String,
    /// Output directory; defaults to $MPDN_OUT_DIR or ./mpdn-out.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Instance config JSON (signal and noise specs).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to $MPDN_OUT_DIR or ./mpdn-out.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct BenchSource {
    /// Shipped experiment configuration.
    #[arg(long, value_parser = presets::BENCH_PRESETS)]
    preset: Option<String>,
    /// Experiment config JSON file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    source: BenchSource,
    /// Override the trial count of the selected config.
    #[arg(long)]
    trials: Option<usize>,
    /// Trial workers: `serial`, `parallel`, or a thread count.
    #[arg(long, default_value = "parallel")]
    jobs: String,
    /// Output directory; defaults to $MPDN_OUT_DIR or ./mpdn-out.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Default output directory, overridable through the environment; an
/// explicit --out-dir always wins.
fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("MPDN_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("mpdn-out"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectra(args) => commands::spectra::run(&args),
        Command::Denoise(args) => commands::denoise::run(&args),
        Command::Simulate(args) => commands::simulate::run(&args),
        Command::Bench(args) => commands::bench::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code())
        }
    }
}
