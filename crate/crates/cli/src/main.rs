use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use bridgeroute::parity::MatchingMode;
use bridgeroute::{GeneratorKind, ProblemKind};
use bridgeroute_cli::bench::THREADS_ENV;
use bridgeroute_cli::commands::{self, CliError, OracleKind, Outcome, SolveArgs};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bridgeroute", version, about = "LP-rounding approximations for Ordered TSP and k-TSPP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Problem {
    Otsp,
    Ktspp,
}

impl From<Problem> for ProblemKind {
    fn from(p: Problem) -> Self {
        match p {
            Problem::Otsp => ProblemKind::Otsp,
            Problem::Ktspp => ProblemKind::Ktspp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Euclidean2d,
    GraphClosure,
    UniformMatrix,
}

#[derive(Clone, Copy, ValueEnum)]
enum Matching {
    Exact,
    Greedy,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleTarget {
    Otsp,
    Ktspp,
    Forest,
    Ojoin,
}

#[derive(Subcommand)]
enum LpCommand {
    /// Solve the cut LP relaxation
    Solve { instance: PathBuf },
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance
    Gen {
        #[arg(long, value_enum)]
        problem: Problem,
        #[arg(long, value_enum, default_value = "euclidean2d")]
        generator: Generator,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run an approximation algorithm
    Solve {
        #[arg(value_enum)]
        problem: Problem,
        instance: PathBuf,
        /// final, warmup, baseline3 or best (Ordered TSP: final or best)
        #[arg(long, default_value = "final")]
        algorithm: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long)]
        dump_intermediate: bool,
        #[arg(long, value_enum, default_value = "exact")]
        matching: Matching,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Exact brute-force optimum
    Oracle {
        #[arg(value_enum)]
        target: OracleTarget,
        instance: PathBuf,
    },
    /// Linear programming relaxation
    Lp {
        #[command(subcommand)]
        command: LpCommand,
    },
    /// Decompose one pair's LP flow into branchings
    Decompose {
        lp: PathBuf,
        #[arg(long)]
        pair: usize,
    },
    /// Random-terminal forest bound
    BridgeCheck {
        instance: PathBuf,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run an experiment config
    Bench {
        config: PathBuf,
        /// Worker threads (overrides the config)
        #[arg(long, env = THREADS_ENV)]
        threads: Option<usize>,
    },
    /// Check a solution file against an instance
    Verify { instance: PathBuf, solution: PathBuf },
}

fn emit(bytes: &[u8], out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::Internal(e.to_string())),
    }
}

fn run(cli: Cli) -> Result<Option<CliError>, CliError> {
    let (outcome, out): (Outcome, Option<PathBuf>) = match cli.command {
        Command::Gen { problem, generator, n, k, seed, out } => {
            let kind = match generator {
                Generator::Euclidean2d => GeneratorKind::Euclidean2d,
                Generator::GraphClosure => GeneratorKind::GraphClosure,
                Generator::UniformMatrix => GeneratorKind::UniformMatrix,
            };
            (commands::gen(kind, problem.into(), n, k, seed)?, out)
        }
        Command::Solve { problem, instance, algorithm, seed, trials, dump_intermediate, matching, out } => {
            let matching = match matching {
                Matching::Exact => MatchingMode::Exact,
                Matching::Greedy => MatchingMode::Greedy,
            };
            let args = SolveArgs { algorithm, seed, trials, dump_intermediate, matching };
            (commands::solve(problem.into(), &instance, &args)?, out)
        }
        Command::Oracle { target, instance } => {
            let kind = match target {
                OracleTarget::Otsp => OracleKind::Otsp,
                OracleTarget::Ktspp => OracleKind::Ktspp,
                OracleTarget::Forest => OracleKind::Forest,
                OracleTarget::Ojoin => OracleKind::Ojoin,
            };
            (commands::oracle(kind, &instance)?, None)
        }
        Command::Lp { command: LpCommand::Solve { instance } } => (commands::lp_solve(&instance)?, None),
        Command::Decompose { lp, pair } => (commands::decompose(&lp, pair)?, None),
        Command::BridgeCheck { instance, gamma, trials, seed } => {
            (commands::bridge_check(&instance, gamma, trials, seed)?, None)
        }
        Command::Bench { config, threads } => {
            let (outcome, summary) = commands::bench(&config, threads)?;
            std::io::stderr().write_all(&summary).map_err(|e| CliError::Internal(e.to_string()))?;
            (outcome, None)
        }
        Command::Verify { instance, solution } => (commands::verify_files(&instance, &solution)?, None),
    };
    emit(&outcome.output, out.as_ref())?;
    Ok(outcome.failure)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(e)) | Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
