//! Command-line front end for `orlicz-finsler`.
//!
//! Exit codes: 0 success, 1 property failure, 2 usage error or malformed
//! input, 3 numerical failure.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod io;
pub mod verify;

pub use config::{CommandKind, ExperimentConfig, FlowSettings, Suite};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("property failure: {0}")]
    Property(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Property(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<orlicz_finsler::Error> for CliError {
    fn from(e: orlicz_finsler::Error) -> Self {
        match e {
            orlicz_finsler::Error::Domain(m) => CliError::Usage(m),
            orlicz_finsler::Error::Numerical(m) => CliError::Numerical(m),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "orlicz-finsler", version, about = "Orlicz-Finsler distances, energies and flows on toric CP^1")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Orlicz gauge norm of sampled function values.
    Norm(NormArgs),
    /// d_chi and I_chi between two potentials.
    Dist(DistArgs),
    /// AM, E_chi, Ding and J energies of one potential.
    Energy(EnergyArgs),
    /// Rooftop envelopes P(u0, u1 - tau).
    Envelope(EnvelopeArgs),
    /// Samples of the weak geodesic joining two potentials.
    Geodesic(GeodesicArgs),
    /// Solve the epsilon-geodesic boundary value problem.
    Epsgeo(EpsgeoArgs),
    /// Kähler-Ricci flow on the anticanonical CP^1.
    Flow(FlowArgs),
    /// Run a property suite.
    Verify(VerifyArgs),
    /// Run an experiment described by a JSON config.
    Run(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct NormArgs {
    /// Weight as inline JSON (e.g. '{"kind":"power","p":2}') or a path to a JSON file.
    #[arg(long)]
    pub weight: String,
    /// CSV of function values (column `value`, else the last column).
    #[arg(long)]
    pub function: PathBuf,
    /// CSV with columns node,weight; must be a probability measure.
    #[arg(long)]
    pub measure: PathBuf,
    /// Output prefix; writes <out>.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DistArgs {
    /// Weight as inline JSON or a path to a JSON file.
    #[arg(long)]
    pub weight: String,
    /// First potential, CSV with columns y,dual_value.
    #[arg(long)]
    pub u0: PathBuf,
    /// Second potential, CSV with columns y,dual_value.
    #[arg(long)]
    pub u1: PathBuf,
    /// Output prefix; writes <out>.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EnergyArgs {
    /// Potential, CSV with columns y,dual_value.
    #[arg(long)]
    pub u: PathBuf,
    /// Weight for E_chi, as inline JSON or a path; E_chi is skipped without it.
    #[arg(long)]
    pub weight: Option<String>,
    /// Output prefix; writes <out>.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EnvelopeArgs {
    /// First potential, CSV with columns y,dual_value.
    #[arg(long)]
    pub u0: PathBuf,
    /// Second potential, CSV with columns y,dual_value.
    #[arg(long)]
    pub u1: PathBuf,
    /// Shifts tau, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub tau: Vec<f64>,
    /// Output prefix; writes <out>.csv instead of printing.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GeodesicArgs {
    /// Start potential, CSV with columns y,dual_value.
    #[arg(long)]
    pub u0: PathBuf,
    /// End potential, CSV with columns y,dual_value.
    #[arg(long)]
    pub u1: PathBuf,
    /// Number of uniform time samples in [0,1] (at least 2).
    #[arg(long, default_value_t = 11)]
    pub steps: usize,
    /// Output prefix; writes <out>.csv instead of printing.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EpsgeoArgs {
    /// Start potential, CSV with columns y,dual_value.
    #[arg(long)]
    pub u0: PathBuf,
    /// End potential, CSV with columns y,dual_value.
    #[arg(long)]
    pub u1: PathBuf,
    /// Regularization epsilon > 0.
    #[arg(long)]
    pub eps: f64,
    /// Output prefix; writes <out>.csv (t,y,dual_value) and <out>.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of time nodes including both ends.
    #[arg(long, default_value_t = 64)]
    pub time_nodes: usize,
    /// Newton stopping tolerance on the max-norm residual.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Weight for the chi-length in the report (default chi_1).
    #[arg(long)]
    pub weight: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct FlowArgs {
    /// Flow settings JSON (schema in docs/flow_config.schema.json).
    #[arg(long)]
    pub config: PathBuf,
    /// Output prefix; writes <out>.csv (per step) and <out>.json (summary).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Property suite to run.
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    /// Random trials per property.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Base seed; trial i uses stream i of this seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Polytope grid size (at least 64).
    #[arg(long, default_value_t = config::DEFAULT_GRID)]
    pub grid: usize,
    /// Output prefix; writes <out>.csv in addition to printing.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Experiment config JSON (schema in docs/experiment_config.schema.json).
    #[arg(long)]
    pub config: PathBuf,
}

/// What a command produced: text for stdout, and whether every property held.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub passed: bool,
}

impl Outcome {
    pub fn ok(stdout: String) -> Self {
        Outcome { stdout, passed: true }
    }
}

pub fn execute(cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Norm(a) => commands::norm(a),
        Command::Dist(a) => commands::dist(a),
        Command::Energy(a) => commands::energy(a),
        Command::Envelope(a) => commands::envelope(a),
        Command::Geodesic(a) => commands::geodesic(a),
        Command::Epsgeo(a) => commands::epsgeo(a),
        Command::Flow(a) => commands::flow(&config::load_flow(&a.config)?, &a.out),
        Command::Verify(a) => commands::verify(a),
        Command::Run(a) => commands::run(&config::load_experiment(&a.config)?),
    }
}

/// Parses arguments, runs, prints, and returns the process exit code.
pub fn main_with<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(o) => {
            print!("{}", o.stdout);
            if o.passed {
                0
            } else {
                eprintln!("property failure: at least one check failed");
                1
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
