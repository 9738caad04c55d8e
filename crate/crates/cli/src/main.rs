//! `protectsim` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 physics validation
//! failure, 4 numerical failure. Errors are also written to stderr as JSON.

mod commands;
mod config;

use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use protectsim::ErrorKind;
use serde::Serialize;

use config::{Format, ProfileArgs, ScenarioArgs};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn config(e: impl Display) -> Self {
        Self { code: 2, kind: "config", message: e.to_string() }
    }
}

impl From<protectsim::Error> for CliError {
    fn from(e: protectsim::Error) -> Self {
        let (code, kind) = match e.kind() {
            ErrorKind::Config => (2, "config"),
            ErrorKind::Validation => (3, "validation"),
            ErrorKind::Numeric => (4, "numeric"),
        };
        Self { code, kind, message: e.to_string() }
    }
}

#[derive(Debug, Parser)]
#[command(name = "protectsim", version, about = "Protective measurement simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single protective run
    Run(ProtocolArgs),
    /// Runs over a list of T values with power-law fits
    Scan(ProtocolArgs),
    /// Pointer variance against the free-spreading formula
    Spread(ProtocolArgs),
    /// Repeated couple/read/collapse rounds on one apparatus
    Series(SeriesArgs),
    /// Repeated weak readout statistics over many traces
    Qnd(QndArgs),
    /// Protective vs conventional ensemble sizes
    QndEnsemble(EnsembleArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Resolved config (or a previous output embedding one); other flags are ignored
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ProtocolArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub profile: ProfileArgs,
    /// Duration, or comma-separated durations for `scan`
    #[arg(long = "T")]
    pub times: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SeriesArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, default_value_t = 100)]
    pub shots: usize,
    /// Pointer eigenvalues per readout bin
    #[arg(long, default_value_t = 4)]
    pub bin_cells: usize,
}

#[derive(Debug, Clone, Args)]
pub struct QndArgs {
    #[arg(long, default_value_t = 0.0)]
    pub n0: f64,
    #[arg(long, default_value_t = 4.0)]
    pub var0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub varm: f64,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 10_000)]
    pub traces: usize,
    /// Significance level of the χ² goodness-of-fit test
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EnsembleArgs {
    #[arg(long, required_unless_present = "config")]
    pub c: Option<f64>,
    #[arg(long = "T", required_unless_present = "config")]
    pub total_time: Option<f64>,
    #[arg(long = "Xperp", required_unless_present = "config")]
    pub x_perp: Option<f64>,
    #[arg(long = "Np", required_unless_present = "config")]
    pub n_p: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("PROTECTSIM_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n >= 1)
            .ok_or_else(|| CliError::config(format!("PROTECTSIM_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(CliError::config)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    code: u8,
    message: &'a str,
}

#[derive(Serialize)]
struct ErrorDocument<'a> {
    schema: &'static str,
    error: ErrorBody<'a>,
}

fn fail(e: CliError) -> ExitCode {
    let doc = ErrorDocument { schema: "v1", error: ErrorBody { kind: e.kind, code: e.code, message: &e.message } };
    eprintln!("{}", serde_json::to_string(&doc).unwrap_or_else(|_| e.message.clone()));
    ExitCode::from(e.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(CliError::config(e.to_string().trim_end())),
    };
    if let Err(e) = configure_threads() {
        return fail(e);
    }
    let result = match &cli.command {
        Command::Run(a) => commands::run(a),
        Command::Scan(a) => commands::scan(a),
        Command::Spread(a) => commands::spread(a),
        Command::Series(a) => commands::series(a),
        Command::Qnd(a) => commands::qnd(a),
        Command::QndEnsemble(a) => commands::ensemble(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
