//! `spai-mg`: smoothing and two-grid analysis, optimal-smoother searches
//! and multigrid solves of the benchmark Poisson problems.
//!
//! Exit status: 0 on success, 1 on a numerical failure (inadmissible
//! smoother, failed verification, solver not converged), 2 on usage errors.

mod commands;
mod output;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{
    BenchArgs, LfaSmoothArgs, LfaTwoGridArgs, OutputArgs, SolveArgs, Table1Args, VerifyArgs,
};

#[derive(Debug, Parser)]
#[command(
    name = "spai-mg",
    version,
    about = "Multigrid with sparse approximate inverse smoothers"
)]
struct Cli {
    #[command(flatten)]
    output: OutputArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal smoothing factor and relaxation parameter of a smoother.
    LfaSmooth(LfaSmoothArgs),
    /// Two-grid convergence factor, optionally optimizing omega.
    LfaTwogrid(LfaTwoGridArgs),
    /// Two-grid factors of the reference smoothers for nu = 1..4.
    Table1(Table1Args),
    /// Solve a benchmark problem with multigrid.
    Solve(SolveArgs),
    /// Search for the optimal 9-point (2D) or 7-point (3D) smoother.
    Verify(VerifyArgs),
    /// Run a grid of solves and report iterations, rates and errors.
    Bench(BenchArgs),
}

/// Invalid input detected by the driver itself.
#[derive(Debug)]
pub struct UsageError(String);

impl UsageError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    use spai_mg::Error as E;
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<E>() {
        Some(
            E::InvalidStencil(_)
            | E::SymmetryViolation { .. }
            | E::UnsupportedDimension(_)
            | E::DimensionMismatch { .. }
            | E::ShapeMismatch(_)
            | E::InvalidGridSize(_)
            | E::UnknownSmoother(_)
            | E::InvalidParameter(_)
            | E::InvalidConfig(_)
            | E::UnknownExample(_),
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    let out = &cli.output;
    let result = match &cli.command {
        Command::LfaSmooth(args) => commands::lfa_smooth(args, out, command),
        Command::LfaTwogrid(args) => commands::lfa_twogrid(args, out, command),
        Command::Table1(args) => commands::table1(args, out),
        Command::Solve(args) => commands::solve_cmd(args, out, command),
        Command::Verify(args) => commands::verify(args, out, command),
        Command::Bench(args) => commands::bench(args, out),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
