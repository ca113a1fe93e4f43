//! Batch front end: verification suites, solves, the shooting oracle, path
//! seeds and parameter sweeps, all driven by one TOML configuration.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
/// A verification suite ran and found failures.
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ADMISSIBILITY: i32 = 3;
pub const EXIT_STAGNATION: i32 = 4;
pub const EXIT_USAGE: i32 = 5;
pub const EXIT_BRACKET: i32 = 6;
pub const EXIT_TUNING: i32 = 7;
pub const EXIT_NUMERIC: i32 = 8;
pub const EXIT_IO: i32 = 9;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Solver(#[from] quasilin::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use quasilin::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Verification(_) => EXIT_VERIFY,
            CliError::Solver(e) => match e {
                E::Validation(_) => EXIT_CONFIG,
                E::Admissibility { .. } => EXIT_ADMISSIBILITY,
                E::Stagnation { .. } => EXIT_STAGNATION,
                E::Usage(_) => EXIT_USAGE,
                E::Bracket(_) => EXIT_BRACKET,
                E::Tuning(_) => EXIT_TUNING,
                E::Domain(_) | E::Numeric(_) | E::Degenerate(_) => EXIT_NUMERIC,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "quasilin", version, about = "Ground and bound states of a quasilinear Schrödinger equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML); defaults are used when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every random choice (sampling of path parameters).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Halve the grid spacing.
    #[arg(long, global = true)]
    pub refine: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Property suite of the dual transform.
    VerifyG {
        /// Test hook: run the suite on a deliberately wrong transform.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Growth and sign conditions of the configured nonlinearity.
    VerifyH,
    /// Minimize the reduced energy (and optionally search for saddles).
    Solve,
    /// Radial shooting oracle.
    Oracle,
    /// Tune the path family scale and export a seed.
    Paths,
    /// One solve per parameter combination of the `[sweep]` section.
    Sweep,
}

/// Resolves the configuration and runs one subcommand, writing a human
/// summary to `log`.
pub fn run(cli: &Cli, log: &mut dyn std::io::Write) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output.directory = out.clone();
    }
    if cli.refine {
        cfg.grid.delta *= 0.5;
    }
    let ctx = commands::Ctx {
        cfg: &cfg,
        seed: cli.seed,
    };
    match cli.command {
        Command::VerifyG { inject_fault } => commands::verify_g(inject_fault, log),
        Command::VerifyH => commands::verify_h(&ctx, log),
        Command::Solve => commands::solve(&ctx, log),
        Command::Oracle => commands::oracle(&ctx, log),
        Command::Paths => commands::paths(&ctx, log),
        Command::Sweep => commands::sweep(&ctx, log),
    }
}

/// Parses `args`, runs, reports errors on stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut lock) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
