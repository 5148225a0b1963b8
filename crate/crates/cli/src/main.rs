//! Command-line front-end for the fixpoint solvers.
//!
//! Three subcommands: `solve` turns a JSON problem file into a
//! certified JSON report, `verify` re-checks a report against its
//! problem with independent oracles, and `catalog` lists (or emits)
//! built-in example problems. Exit codes: 0 certified, 1 input error,
//! 2 certification failure (a failure report is still emitted).

mod catalog;
mod problem;
mod report;
mod solve;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use problem::Failure;

#[derive(Parser)]
#[command(
    name = "fixpoint",
    version,
    about = "Certified approximate fixed points and saddle points"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file and emit a certified JSON report.
    Solve {
        /// JSON problem file.
        path: PathBuf,
        /// Override the problem file's target accuracy.
        #[arg(long)]
        eps: Option<f64>,
        /// Write the report to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the problem file's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Per-axis resolution cap for solver grids.
        #[arg(long = "grid-cap", default_value_t = 1u64 << 20)]
        grid_cap: u64,
        /// Suppress side notes on stdout (the report itself still prints).
        #[arg(long)]
        quiet: bool,
    },
    /// Re-check a result file against its problem with independent oracles.
    Verify {
        /// JSON problem file.
        problem: PathBuf,
        /// JSON result file produced by `solve`.
        result: PathBuf,
        /// Check against this accuracy instead of the result file's eps.
        #[arg(long)]
        eps: Option<f64>,
        /// Only report through the exit code.
        #[arg(long)]
        quiet: bool,
    },
    /// List built-in example problems.
    Catalog {
        /// Write each example as <name>.json into this directory.
        #[arg(long)]
        emit: Option<PathBuf>,
        /// Print bare names (or nothing with --emit).
        #[arg(long)]
        quiet: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems are input errors; --help/--version exit 0.
            let is_help = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if is_help { 1 } else { 0 });
        }
    };
    let outcome = match &cli.command {
        Command::Solve {
            path,
            eps,
            out,
            seed,
            grid_cap,
            quiet,
        } => solve::cmd_solve(
            path,
            &solve::SolveFlags {
                eps: *eps,
                out: out.as_deref(),
                seed: *seed,
                grid_cap: *grid_cap,
                quiet: *quiet,
            },
        ),
        Command::Verify {
            problem,
            result,
            eps,
            quiet,
        } => verify::cmd_verify(
            problem,
            result,
            &verify::VerifyFlags {
                eps: *eps,
                quiet: *quiet,
            },
        ),
        Command::Catalog { emit, quiet } => catalog::cmd_catalog(emit.as_deref(), *quiet),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(Failure::Certification(message)) => {
            eprintln!("not certified: {message}");
            ExitCode::from(2)
        }
    }
}
