mod classify;
mod compare;
mod gen;
mod record;
mod solve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "hscop", version, about = "Heaviside composite optimization: data, solves, and comparison tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic treatment dataset and its manifest.
    GenData(gen::GenArgs),
    /// Solve the Gini-constrained treatment problem with the full MIP or PIP.
    Solve(solve::SolveArgs),
    /// Tabulate result files as method, welfare, gini, time.
    Compare(compare::CompareArgs),
    /// Multiclass classification: standard, Neyman-Pearson, or tree.
    Classify(classify::ClassifyArgs),
    /// Export a treatment problem as JSON, or solve a problem JSON.
    #[command(subcommand)]
    Problem(ProblemCommand),
}

#[derive(Subcommand)]
enum ProblemCommand {
    Export(solve::ExportArgs),
    Solve(solve::ProblemSolveArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Full,
    Pip,
}

/// Solver flags shared by `solve`, `problem solve` and `classify`.
#[derive(Args, Clone, Debug)]
pub struct MethodArgs {
    #[arg(long, value_enum, default_value = "full")]
    pub method: Method,
    /// Fraction of atoms allowed to carry a binary in a PIP subproblem.
    #[arg(long, default_value_t = 0.4)]
    pub cap: f64,
    /// Stale PIP iterations before stopping.
    #[arg(long, default_value_t = 10)]
    pub stale: usize,
    /// Wall-clock budget in seconds; defaults to the tier for the atom count.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Divides the default time-limit tier.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
}

pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_ABORT: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(a) => gen::run(&a),
        Command::Solve(a) => solve::run(&a),
        Command::Compare(a) => compare::run(&a),
        Command::Classify(a) => classify::run(&a),
        Command::Problem(ProblemCommand::Export(a)) => solve::export(&a),
        Command::Problem(ProblemCommand::Solve(a)) => solve::run_problem(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

pub fn write_output(path: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}
