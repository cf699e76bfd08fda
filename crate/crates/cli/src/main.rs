//! `spadmm` command-line front end.
//!
//! Exit codes: 0 success or convergence, 1 input error, 2 iteration limit,
//! 3 divergence, 4 contradictory verdicts in `analyze`, 5 slack violation in
//! `diagnose`.

mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "spadmm",
    version,
    about = "Semi-proximal ADMM solver and diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve with the primal sPADMM.
    SolvePrimal(SolveArgs),
    /// Solve the restricted dual with the sGS-sPADMM.
    SolveDualSgs(SolveArgs),
    /// Recheck the step inequalities of a recorded ledger against a reference point.
    Diagnose(DiagnoseArgs),
    /// Certify a KKT point and report the second-order condition verdicts.
    Analyze(AnalyzeArgs),
    /// Write a seeded random problem file.
    Generate(GenerateArgs),
}

#[derive(Args, Clone)]
pub struct RunFlags {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dual step length; values outside (0, golden ratio) run with checks reported only.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Penalty parameter.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Relative KKT residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// none, full or stride:K.
    #[arg(long)]
    pub history: Option<String>,
}

#[derive(Args)]
pub struct SolveArgs {
    /// Problem file.
    pub problem: PathBuf,
    #[command(flatten)]
    pub run: RunFlags,
    #[arg(long, env = "SPADMM_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SolverKind {
    Primal,
    DualSgs,
}

#[derive(Args)]
pub struct DiagnoseArgs {
    /// Problem file the ledger was recorded on.
    pub problem: PathBuf,
    /// Ledger CSV written by a solve command.
    pub ledger: PathBuf,
    /// Solver that produced the ledger.
    #[arg(long, value_enum, default_value = "primal")]
    pub solver: SolverKind,
    /// Solution file holding the reference point; defaults to the problem's reference block.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunFlags,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    pub problem: PathBuf,
    /// Residual tolerance for certification, relative to the data scale.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, env = "SPADMM_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, hide = true)]
    pub test_force_inconsistent: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    Qp,
    Qsdp,
}

#[derive(Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "qp")]
    pub family: FamilyArg,
    /// Vector length for `qp`, matrix order for `qsdp`.
    #[arg(long, default_value_t = 10)]
    pub size: usize,
    /// Number of equality constraints.
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    /// Rank of Q; 0 gives a linear program.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub degenerate: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::SolvePrimal(a) => commands::solve(&a, SolverKind::Primal),
        Command::SolveDualSgs(a) => commands::solve(&a, SolverKind::DualSgs),
        Command::Diagnose(a) => commands::diagnose(&a),
        Command::Analyze(a) => commands::analyze(&a),
        Command::Generate(a) => commands::generate(&a),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::EXIT_INPUT)
        }
    }
}
