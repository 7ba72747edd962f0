//! Command-line front end: load or generate a problem, run one of the
//! solvers, and write the trace CSV and the certificate report.

pub mod config;
pub mod runner;
pub mod trace;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

pub use config::{Algorithm, Generator, GeneratorName, ProblemSource, RunArgs, RunConfig};
pub use runner::{compare, execute, exit_code, run, sweep, RunReport, RunResult, SummaryRow, SweepResult};

#[derive(Debug, Parser)]
#[command(name = "lqpadmm", version, about = "Multi-block ADMM with LQP regularization and run certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem. Exit status 0 when converged, 2 at the iteration cap, 1 on error.
    Run(RunArgs),
    /// Solve two configurations and print a summary table.
    Compare(CompareArgs),
    /// Solve over a grid of (α, τ), skipping pairs outside the stepsize region.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// JSON config of the first run (same keys as the `run` flags).
    pub config_a: PathBuf,
    /// JSON config of the second run.
    pub config_b: PathBuf,
    /// Write the table here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated α values.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub alphas: Vec<f64>,
    /// Comma-separated τ values.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub taus: Vec<f64>,
    /// Write the table here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn table_sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    })
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let result = run(&cfg)?;
            Ok(exit_code(result.reason()))
        }
        Command::Compare(args) => {
            let load = |path: &PathBuf| {
                RunArgs {
                    config: Some(path.clone()),
                    ..RunArgs::default()
                }
                .resolve()
            };
            let rows = compare(&load(&args.config_a)?, &load(&args.config_b)?)?;
            runner::write_summary(table_sink(&args.out)?, &rows)?;
            Ok(0)
        }
        Command::Sweep(args) => {
            let base = args.run.resolve()?;
            let result = sweep(&base, &args.alphas, &args.taus)?;
            for (alpha, tau, reason) in &result.skipped {
                eprintln!("skipped (α, τ) = ({alpha}, {tau}): {reason}");
            }
            runner::write_summary(table_sink(&args.out)?, &result.rows)?;
            Ok(0)
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit status.
pub fn entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
