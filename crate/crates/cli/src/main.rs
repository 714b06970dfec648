//! `driftev` command-line front end.
//!
//! Exit codes: 0 success, 1 solver non-convergence, 2 validation, geometry or
//! certification failure, 3 I/O or parse error.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use driftev::{Error, Method, SeedVector, SolverConfig};

#[derive(Debug, Parser)]
#[command(
    name = "driftev",
    version,
    about = "Principal eigenvalues of nonlocal dispersal operators with drift"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Check the standing assumptions on a problem file.
    Validate(ValidateArgs),
    /// Principal eigenpair on a bounded domain.
    Solve(SolveArgs),
    /// Eigenvalues of growing truncations of an unbounded domain.
    Exhaust(ExhaustArgs),
    /// Harnack constant versus the computed eigenfunction on an interior window.
    Harnack(HarnackArgs),
    /// Batch of structural property checks.
    Certify(CertifyArgs),
    /// Moving-frame KPP persistence sweep.
    Kpp(KppArgs),
    /// Repeat a run recorded in a manifest.
    #[serde(skip)]
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Common {
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Auto,
    Power,
    ShiftInvert,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SolverArgs {
    /// Target width of the eigenvalue bracket.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    /// Random positive start vector with this seed instead of all ones.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run every loop on the calling thread.
    #[arg(long)]
    pub sequential: bool,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            tol_bracket: self.tol,
            max_iters: self.max_iters,
            seed_vector: match self.seed {
                Some(seed) => SeedVector::RandomPositive { seed },
                None => SeedVector::UniformOnes,
            },
            method: match self.method {
                MethodArg::Auto => Method::Auto,
                MethodArg::Power => Method::Power,
                MethodArg::ShiftInvert => Method::ShiftInvert,
            },
            record_trace: false,
            exec: if self.sequential {
                driftev::par::Exec::Sequential
            } else {
                driftev::par::Exec::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ValidateArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// Validation mesh size; the problem file's value when absent.
    #[arg(long)]
    pub mesh: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SolveArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// Grid nodes, boundary node included.
    #[arg(long, default_value_t = 201)]
    pub n: usize,
    /// Solve the reflected problem and map back.
    #[arg(long)]
    pub reflect: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ExhaustArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub r0: f64,
    #[arg(long, default_value_t = 2.0)]
    pub growth: f64,
    #[arg(long, default_value_t = 5)]
    pub count: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub gap_tol: f64,
    /// Target grid spacing on every truncation.
    #[arg(long, default_value_t = 0.01)]
    pub h: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct HarnackArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, default_value_t = 201)]
    pub n: usize,
    #[arg(long)]
    pub r1: f64,
    #[arg(long)]
    pub r2: f64,
    #[arg(long)]
    pub eps: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CertifyArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// TOML file with `[[check]]` tables.
    #[arg(long)]
    pub checks: PathBuf,
    #[arg(long, default_value_t = 201)]
    pub n: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Niche {
    /// `g = 1` on `|x| <= 1`, `-1` elsewhere.
    Favorable,
    /// `g = -1` everywhere.
    Hostile,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct KppArgs {
    #[arg(long, value_enum, default_value_t = Niche::Favorable)]
    pub niche: Niche,
    /// Comma-separated shift speeds.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 5.0])]
    pub speeds: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub h: f64,
    /// Time step; the largest bound-preserving step for each speed when absent.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 200.0)]
    pub t_end: f64,
    /// Half-width `R` of the computational domain.
    #[arg(long, default_value_t = 8.0)]
    pub radius: f64,
    /// Carrying bound `A`.
    #[arg(long, default_value_t = 1.5)]
    pub carrying: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub mass_tol: f64,
    /// Dump the field every k steps.
    #[arg(long)]
    pub record_every: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write to this directory instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::NoConvergence { .. } | Error::Structure(_) => 1,
            Error::Parse(_) | Error::Io(_) => 3,
            _ => 2,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(3, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
