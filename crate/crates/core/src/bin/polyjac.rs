use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use polyjac::bench::{
    exceeds_constant_memory, footprint_bytes, run_bench, run_check, BenchError, BenchOptions,
    CONSTANT_MEMORY_BYTES, DEFAULT_EVALS, PAPER_EVALS,
};
use polyjac::format::{read_system, write_system};
use polyjac::{random_system, GridConfig, PolynomialSystem};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "polyjac", version, about = "Evaluate sparse polynomial systems and their Jacobians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random system file
    Generate {
        #[command(flatten)]
        shape: Shape,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time the pipeline against the reference evaluator
    Bench {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = DEFAULT_EVALS)]
        evals: usize,
        /// Use the published evaluation count (100,000)
        #[arg(long, conflicts_with = "evals")]
        paper_evals: bool,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Compare pipeline and reference at random points
    Check {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
}

#[derive(Args)]
struct Shape {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    d: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// A system file, or generator parameters (defaulting to n=32 m=32 k=9 d=2).
#[derive(Args)]
struct Source {
    #[arg(long, conflicts_with_all = ["n", "m", "k", "d"])]
    system: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    d: Option<u32>,
    /// Seeds the generator and the evaluation points
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 32)]
    block_size: usize,
}

impl GridArgs {
    fn config(&self) -> polyjac::Result<GridConfig> {
        let workers = self.workers.unwrap_or_else(|| GridConfig::default().workers);
        GridConfig::new(self.block_size, workers)
    }
}

impl Source {
    fn load(&self) -> polyjac::Result<PolynomialSystem> {
        match &self.system {
            Some(path) => read_system(path),
            None => random_system(
                self.n.unwrap_or(32),
                self.m.unwrap_or(32),
                self.k.unwrap_or(9),
                self.d.unwrap_or(2),
                self.seed,
            ),
        }
    }
}

fn usage_error(err: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(EXIT_USAGE)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate { shape, out } => {
            let sys = match random_system(shape.n, shape.m, shape.k, shape.d, shape.seed) {
                Ok(sys) => sys,
                Err(e) => return usage_error(e),
            };
            if let Err(e) = write_system(&sys, &out) {
                return usage_error(e);
            }
            let bytes = footprint_bytes(shape.n, shape.m, shape.k);
            println!("wrote {} ({} monomials)", out.display(), sys.monomial_count());
            println!("footprint_bytes={bytes}");
            if exceeds_constant_memory(bytes) {
                eprintln!(
                    "warning: positions+exponents need {bytes} bytes, reaching the {CONSTANT_MEMORY_BYTES}-byte constant memory capacity"
                );
            }
            ExitCode::SUCCESS
        }
        Command::Bench {
            source,
            evals,
            paper_evals,
            grid,
        } => {
            let (sys, grid) = match source.load().and_then(|s| Ok((s, grid.config()?))) {
                Ok(v) => v,
                Err(e) => return usage_error(e),
            };
            let opts = BenchOptions {
                evals: if paper_evals { PAPER_EVALS } else { evals },
                grid,
                seed: source.seed,
            };
            match run_bench(&sys, &opts) {
                Ok(report) => {
                    println!("{report}");
                    println!("{}", report.result_line());
                    ExitCode::SUCCESS
                }
                Err(BenchError::CheckFailed(report)) => {
                    eprintln!("correctness gate failed: {report}");
                    ExitCode::from(EXIT_CHECK_FAILED)
                }
                Err(BenchError::Core(e)) => usage_error(e),
            }
        }
        Command::Check {
            source,
            points,
            tol,
            grid,
        } => {
            let (sys, grid) = match source.load().and_then(|s| Ok((s, grid.config()?))) {
                Ok(v) => v,
                Err(e) => return usage_error(e),
            };
            match run_check(&sys, grid, points, source.seed, tol) {
                Ok(outcome) => {
                    if let Some(worst) = &outcome.worst {
                        println!("worst point: {worst}");
                    }
                    if outcome.pass() {
                        println!("pass: {} point(s) within tol {tol:e}", outcome.points);
                        ExitCode::SUCCESS
                    } else {
                        eprintln!(
                            "FAIL: {} of {} point(s) exceed tol {tol:e}",
                            outcome.failures, outcome.points
                        );
                        ExitCode::from(EXIT_CHECK_FAILED)
                    }
                }
                Err(e) => usage_error(e),
            }
        }
    }
}
