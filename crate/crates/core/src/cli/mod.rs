//! Command-line driver: scenario ingestion, runs, sweeps, manufactured
//! solutions and the compactness experiment.
//!
//! Exit codes: 0 success, 2 configuration error, 3 invariant violation,
//! 4 numerical abort.

mod commands;
mod scenario;

pub use commands::{
    cmd_compactness, cmd_mms, cmd_run, cmd_sweep, cmd_validate, execute, mms_tables, prepare_output, sweep,
    sweep_point_dir, sweep_summary_csv, RunOutcome, SweepRow, MMS_MIN_ORDER, MMS_SUITES,
};
pub use scenario::{
    parse_document, parse_override, parse_scenario, preset, BudgetSpec, GridSpec, InitialSpec, LawSpec, RecordSpec,
    Scenario, SweepSpec, BUDGET_C1, BUDGET_C2, PRESETS, RESOLVED_NAME,
};

use clap::{Parser, Subcommand};
use std::ffi::OsString;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("numerical abort: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    fn io(what: &str, e: impl std::fmt::Display) -> CliError {
        CliError::Config(format!("{what}: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "mhdlab", version, about = "Regularized compressible MHD laboratory")]
pub struct Cli {
    /// Scenario file; without it the `orszag_tang` preset is used.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, replacing the scenario's `output`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 lets the pool decide).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// `key=value` applied on top of the scenario, e.g. `scheme.delta=0.01`.
    #[arg(long = "override", global = true)]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the scenario and write diagnostics, budgets and snapshots.
    Run,
    /// One run per (epsilon, delta) pair of the sweep lists, plus a summary.
    Sweep,
    /// Manufactured-solution convergence tables.
    Mms {
        #[arg(default_value = "1d")]
        suite: String,
    },
    /// Effective-viscous-flux oscillation experiment.
    Compactness,
    /// Resolve and check the scenario without running it.
    Validate,
}

pub fn load(cli: &Cli) -> Result<Scenario, CliError> {
    let mut scenario = match &cli.config {
        Some(path) => parse_scenario(path, &cli.overrides)?,
        None => parse_document("", &cli.overrides, std::path::Path::new("."))?,
    };
    if let Some(out) = &cli.out {
        scenario.output = out.clone();
    }
    Ok(scenario)
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    if let Command::Mms { suite } = &cli.command {
        let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        return cmd_mms(suite, &out).map(|_| ());
    }
    let scenario = load(cli)?;
    match cli.command {
        Command::Run => cmd_run(&scenario).map(|_| ()),
        Command::Sweep => cmd_sweep(&scenario).map(|_| ()),
        Command::Compactness => cmd_compactness(&scenario).map(|_| ()),
        Command::Validate => cmd_validate(&scenario),
        Command::Mms { .. } => unreachable!(),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mhdlab: {e}");
            e.exit_code()
        }
    }
}
