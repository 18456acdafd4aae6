//! Benchmark and correctness-check drivers behind the command line.

use std::fmt;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{EvaluationContext, GridConfig};
use crate::error::Error;
use crate::kernels::MultCounter;
use crate::oracle::{compare, naive_evaluate, naive_jacobian, ComparisonReport};
use crate::system::{EvaluationPoint, PolynomialSystem};

/// Capacity of the device constant memory that holds positions and exponents.
pub const CONSTANT_MEMORY_BYTES: usize = 65_536;

/// Tolerance of the correctness gate that precedes every timing.
pub const GATE_TOLERANCE: f64 = 1e-10;

/// Evaluation count used by the published runs.
pub const PAPER_EVALS: usize = 100_000;

/// Default evaluation count for desk-scale runs.
pub const DEFAULT_EVALS: usize = 1_000;

/// Bytes taken by the positions and exponents arrays: `2 n m k`.
pub fn footprint_bytes(n: usize, m: usize, k: usize) -> usize {
    2 * n * m * k
}

/// A footprint at or above the constant-memory capacity does not fit beside anything else.
pub fn exceeds_constant_memory(bytes: usize) -> bool {
    bytes >= CONSTANT_MEMORY_BYTES
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("pipeline disagrees with the reference: {0}")]
    CheckFailed(ComparisonReport),
    #[error(transparent)]
    Core(#[from] Error),
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub evals: usize,
    pub grid: GridConfig,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct BenchmarkReport {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub d: u32,
    pub block_size: usize,
    pub workers: usize,
    pub evals: usize,
    pub baseline: Duration,
    pub pipeline: Duration,
    pub mults: MultCounter,
    pub gate: ComparisonReport,
}

impl BenchmarkReport {
    pub fn monomials(&self) -> usize {
        self.n * self.m
    }

    pub fn footprint_bytes(&self) -> usize {
        footprint_bytes(self.n, self.m, self.k)
    }

    pub fn speedup(&self) -> f64 {
        self.baseline.as_secs_f64() / self.pipeline.as_secs_f64()
    }

    /// Single `RESULT key=value ...` line for scripts.
    pub fn result_line(&self) -> String {
        format!(
            "RESULT n={} m={} k={} d={} monomials={} B={} workers={} evals={} baseline_ms={:.3} pipeline_ms={:.3} speedup={:.3} mults={} footprint_bytes={}",
            self.n,
            self.m,
            self.k,
            self.d,
            self.monomials(),
            self.block_size,
            self.workers,
            self.evals,
            self.baseline.as_secs_f64() * 1e3,
            self.pipeline.as_secs_f64() * 1e3,
            self.speedup(),
            self.mults.total(),
            self.footprint_bytes(),
        )
    }
}

impl fmt::Display for BenchmarkReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "system: n={} m={} k={} d={} ({} monomials)",
            self.n,
            self.m,
            self.k,
            self.d,
            self.monomials()
        )?;
        writeln!(
            f,
            "grid: block size {}, {} worker(s); {} evaluations",
            self.block_size, self.workers, self.evals
        )?;
        writeln!(f, "correctness gate: {}", self.gate)?;
        writeln!(
            f,
            "reference (correctness baseline, 1 thread): {:>10.3} ms",
            self.baseline.as_secs_f64() * 1e3
        )?;
        writeln!(
            f,
            "pipeline:                                   {:>10.3} ms",
            self.pipeline.as_secs_f64() * 1e3
        )?;
        writeln!(f, "ratio: {:.2}", self.speedup())?;
        writeln!(
            f,
            "complex multiplications: {} (powers {}, factors {}, terms {})",
            self.mults.total(),
            self.mults.powers,
            self.mults.factors,
            self.mults.terms
        )?;
        write!(f, "positions+exponents footprint: {} bytes", self.footprint_bytes())
    }
}

/// Gates on correctness at a random point, then times `evals` evaluations of
/// the reference and of the pipeline at that point.
pub fn run_bench(sys: &PolynomialSystem, opts: &BenchOptions) -> Result<BenchmarkReport, BenchError> {
    if opts.evals == 0 {
        return Err(Error::InvalidParameter("evals must be at least 1".into()).into());
    }
    let mut ctx = EvaluationContext::new(sys, opts.grid)?;
    let point = EvaluationPoint::random(sys.n(), opts.seed);

    let first = ctx.evaluate(&point)?;
    let gate = compare(&first, sys, &point, GATE_TOLERANCE)?;
    if !gate.pass {
        return Err(BenchError::CheckFailed(gate));
    }

    let start = Instant::now();
    for _ in 0..opts.evals {
        std::hint::black_box(naive_evaluate(sys, std::hint::black_box(&point)));
        std::hint::black_box(naive_jacobian(sys, &point));
    }
    let baseline = start.elapsed();

    let report = ctx.run_batch(std::slice::from_ref(&point), opts.evals, |_, r| {
        std::hint::black_box(r);
    })?;

    Ok(BenchmarkReport {
        n: sys.n(),
        m: sys.m(),
        k: sys.k(),
        d: sys.d(),
        block_size: opts.grid.block_size,
        workers: opts.grid.workers,
        evals: opts.evals,
        baseline,
        pipeline: report.wall,
        mults: report.mults,
        gate,
    })
}

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub points: usize,
    pub failures: usize,
    /// Report of the point with the largest error.
    pub worst: Option<ComparisonReport>,
}

impl CheckOutcome {
    pub fn pass(&self) -> bool {
        self.failures == 0
    }
}

/// Compares pipeline and reference at `points` random points from `seed`.
pub fn run_check(
    sys: &PolynomialSystem,
    grid: GridConfig,
    points: usize,
    seed: u64,
    tol: f64,
) -> Result<CheckOutcome, Error> {
    let mut ctx = EvaluationContext::new(sys, grid)?;
    run_check_with(&mut ctx, sys, points, seed, tol)
}

/// Like [`run_check`] on an existing context, whose layout may differ from `sys`.
pub fn run_check_with(
    ctx: &mut EvaluationContext,
    sys: &PolynomialSystem,
    points: usize,
    seed: u64,
    tol: f64,
) -> Result<CheckOutcome, Error> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst: Option<ComparisonReport> = None;
    for _ in 0..points {
        let point = EvaluationPoint::random_with(sys.n(), &mut rng);
        let result = ctx.evaluate(&point)?;
        let report = compare(&result, sys, &point, tol)?;
        if !report.pass {
            failures += 1;
        }
        let err = |r: &ComparisonReport| r.worst.map_or(0.0, |w| w.error);
        if worst.as_ref().is_none_or(|w| err(&report) > err(w) || !report.pass && w.pass) {
            worst = Some(report);
        }
    }
    Ok(CheckOutcome {
        points,
        failures,
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::predicted_mults;
    use crate::system::random_system;

    #[test]
    fn footprints() {
        assert_eq!(footprint_bytes(32, 32, 9), 18_432);
        assert!(!exceeds_constant_memory(18_432));
        assert_eq!(footprint_bytes(32, 64, 16), 65_536);
        assert!(exceeds_constant_memory(65_536));
        assert_eq!(footprint_bytes(30, 30, 15), 27_000);
        assert_eq!(footprint_bytes(40, 40, 20), 64_000);
        assert!(!exceeds_constant_memory(64_000));
    }

    #[test]
    fn small_bench() {
        let sys = random_system(8, 8, 4, 3, 1).unwrap();
        let opts = BenchOptions {
            evals: 20,
            grid: GridConfig::new(32, 2).unwrap(),
            seed: 5,
        };
        let report = run_bench(&sys, &opts).unwrap();
        assert!(report.gate.pass);
        assert_eq!(report.mults.total(), 20 * predicted_mults(8, 8, 4, 3));
        let line = report.result_line();
        assert!(line.starts_with("RESULT n=8 m=8 k=4 d=3 monomials=64 B=32 workers=2 evals=20 "));
        assert!(line.contains(&format!("mults={}", 20 * predicted_mults(8, 8, 4, 3))));
        assert!(line.ends_with("footprint_bytes=512"));
    }

    #[test]
    fn zero_evals_rejected() {
        let sys = random_system(4, 4, 2, 2, 1).unwrap();
        let opts = BenchOptions {
            evals: 0,
            grid: GridConfig::new(32, 1).unwrap(),
            seed: 0,
        };
        assert!(matches!(run_bench(&sys, &opts), Err(BenchError::Core(Error::InvalidParameter(_)))));
    }

    #[test]
    fn check_rejects_zero_tolerance() {
        let sys = random_system(4, 4, 2, 2, 1).unwrap();
        assert!(run_check(&sys, GridConfig::new(32, 1).unwrap(), 1, 0, 0.0).is_err());
    }
}
