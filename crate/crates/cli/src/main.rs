//! `screlax`: instance generation, the pattern oracle, hierarchy runs,
//! facet strengthening and dominance comparisons.
//!
//! Exit codes: 0 on success, 1 when a computation fails, 2 on bad usage or
//! unreadable input.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "screlax", version, about = "Successive convex relaxations for LCPs")]
struct Cli {
    /// Cap on worker threads for concurrent LP solves.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a seeded random instance.
    Gen(GenArgs),
    /// Enumerate complementarity patterns and list one solution per feasible pattern.
    Solve(SolveArgs),
    /// Run a relaxation hierarchy and write its trace.
    Run(RunArgs),
    /// Run facet strengthening on the explicit-slack formulation.
    Hull(HullArgs),
    /// Compare the facet relaxations with the binary homogeneous hierarchy.
    Compare(CompareArgs),
    /// Flatten a trace into CSV.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub ell: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ClassArg::General)]
    pub class: ClassArg,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
#[value(rename_all = "snake_case")]
pub enum ClassArg {
    General,
    SymmetricPsd,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    pub instance: PathBuf,
    /// Box `‖x‖∞ ≤ bound`; defaults to `10(1 + ‖q‖∞)(1 + ‖M‖∞)`.
    #[arg(long)]
    pub bound: Option<f64>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ProbeArgs {
    /// Number of random probe directions added to the objective and `±e_i`.
    #[arg(long, default_value_t = 16)]
    pub probes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    pub instance: PathBuf,
    #[arg(long)]
    pub form: String,
    #[arg(long)]
    pub mode: String,
    /// `full` or `minimal` (binary coordinates only).
    #[arg(long, default_value = "full")]
    pub d0: String,
    #[arg(long, default_value_t = 10)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[command(flatten)]
    pub probe: ProbeArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write the trace as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arith {
    Float,
    Rational,
}

#[derive(Args, Debug)]
pub struct HullArgs {
    pub instance: PathBuf,
    /// Number of strengthening steps; defaults to `ell`.
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, value_enum, default_value_t = Arith::Float)]
    pub arith: Arith,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[command(flatten)]
    pub probe: ProbeArgs,
    /// Attach a dominance comparison over the same iterations.
    #[arg(long)]
    pub compare_dominance: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    pub instance: PathBuf,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[command(flatten)]
    pub probe: ProbeArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Trace written by `run`.
    pub trace: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SCRELAX_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let out = match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::Solve(a) => commands::solve(&a),
        Command::Run(a) => commands::run(&a),
        Command::Hull(a) => commands::hull(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Report(a) => commands::report(&a),
    };
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
