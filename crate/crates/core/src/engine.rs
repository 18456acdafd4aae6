//! Virtual thread-block grid and the three-stage evaluation pipeline.
//!
//! A launch splits `total` thread ids into blocks of `B`; the last block is
//! padded and its surplus ids are skipped. Long-lived workers pull block
//! indices from a shared counter until none remain, and a launch returns only
//! after every block has run, which is the barrier between stages.

use std::marker::PhantomData;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{Error, Result};
use crate::kernels::{
    common_factor, fill_powers_row, stage2_term, stage3_sum, MulCount, MultCounter, PowersTable,
    Tally, ThreadWorkspace,
};
use crate::packing::{build_layout, MonsBuffer, PackedLayout};
use crate::system::{ComplexValue, EvaluationPoint, EvaluationResult, PolynomialSystem};

pub const DEFAULT_BLOCK_SIZE: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridConfig {
    pub block_size: usize,
    pub workers: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            block_size: DEFAULT_BLOCK_SIZE,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl GridConfig {
    pub fn new(block_size: usize, workers: usize) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::InvalidParameter("block size must be at least 1".into()));
        }
        if workers == 0 {
            return Err(Error::InvalidParameter("worker count must be at least 1".into()));
        }
        Ok(Self {
            block_size,
            workers,
        })
    }
}

/// Shape of one launch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LaunchShape {
    pub blocks: usize,
    pub pad_threads: usize,
}

impl LaunchShape {
    pub fn new(total: usize, block_size: usize) -> Self {
        let blocks = total.div_ceil(block_size);
        Self {
            blocks,
            pad_threads: blocks * block_size - total,
        }
    }
}

/// Worker pool plus launch geometry.
pub struct Grid {
    config: GridConfig,
    pool: Option<ThreadPool>,
}

impl Grid {
    pub fn new(config: GridConfig) -> Result<Self> {
        let config = GridConfig::new(config.block_size, config.workers)?;
        let pool = if config.workers > 1 {
            Some(
                ThreadPoolBuilder::new()
                    .num_threads(config.workers)
                    .thread_name(|i| format!("grid-worker-{i}"))
                    .build()
                    .map_err(|e| Error::InvalidParameter(format!("cannot start workers: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self { config, pool })
    }

    pub fn config(&self) -> GridConfig {
        self.config
    }

    /// Runs `kernel` once for every thread id in `[0, total)`.
    ///
    /// Each worker builds its private state with `init` and returns it at the
    /// end; the states of all workers are returned in worker order.
    pub fn launch<S, I, K>(&self, total: usize, init: I, kernel: K) -> Result<(LaunchShape, Vec<S>)>
    where
        S: Send,
        I: Fn() -> S + Sync,
        K: Fn(&mut S, usize) + Sync,
    {
        let b = self.config.block_size;
        let shape = LaunchShape::new(total, b);
        if total == 0 {
            return Ok((shape, Vec::new()));
        }
        let next = AtomicUsize::new(0);
        let worker = || {
            let mut state = init();
            loop {
                let block = next.fetch_add(1, Ordering::Relaxed);
                if block >= shape.blocks {
                    break;
                }
                let start = block * b;
                for t in start..(start + b).min(total) {
                    kernel(&mut state, t);
                }
            }
            state
        };
        let states = catch_unwind(AssertUnwindSafe(|| match &self.pool {
            Some(pool) => pool.broadcast(|_| worker()),
            None => vec![worker()],
        }))
        .map_err(|payload| Error::KernelPanic(panic_message(payload.as_ref())))?;
        Ok((shape, states))
    }
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown panic payload".to_string()
    }
}

/// One-shot launch on a temporary grid; see [`Grid::launch`] for the long-lived form.
pub fn run_grid<K>(kernel: K, total: usize, block_size: usize, workers: usize) -> Result<LaunchShape>
where
    K: Fn(usize) + Sync,
{
    let grid = Grid::new(GridConfig::new(block_size, workers)?)?;
    let (shape, _) = grid.launch(total, || (), |_, t| kernel(t))?;
    Ok(shape)
}

/// Write handle to a buffer whose slots are partitioned among grid threads.
struct Scatter<'a> {
    ptr: *mut ComplexValue,
    len: usize,
    _borrow: PhantomData<&'a mut [ComplexValue]>,
}

// SAFETY: only hands out writes to distinct indices, see `write`.
unsafe impl Send for Scatter<'_> {}
unsafe impl Sync for Scatter<'_> {}

impl<'a> Scatter<'a> {
    fn new(slice: &'a mut [ComplexValue]) -> Self {
        Self {
            ptr: slice.as_mut_ptr(),
            len: slice.len(),
            _borrow: PhantomData,
        }
    }

    /// # Safety
    /// No other thread may read or write `idx` during the same launch.
    #[inline(always)]
    unsafe fn write(&self, idx: usize, value: ComplexValue) {
        assert!(idx < self.len);
        self.ptr.add(idx).write(value);
    }

    /// # Safety
    /// The range must be owned by the calling thread for the launch.
    #[inline(always)]
    #[allow(clippy::mut_from_ref)]
    unsafe fn chunk(&self, start: usize, len: usize) -> &mut [ComplexValue] {
        assert!(start + len <= self.len);
        std::slice::from_raw_parts_mut(self.ptr.add(start), len)
    }
}

/// Wall time and multiplication tallies of a batch.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchReport {
    pub evaluations: usize,
    pub wall: Duration,
    pub mults: MultCounter,
}

impl BatchReport {
    pub fn mean(&self) -> Duration {
        if self.evaluations == 0 {
            Duration::ZERO
        } else {
            self.wall / self.evaluations as u32
        }
    }
}

/// Packed layout, grid, and the reusable stage buffers for one system.
///
/// Not meant to be shared between concurrent evaluations; parallelism happens
/// inside each evaluation.
pub struct EvaluationContext {
    layout: PackedLayout,
    grid: Grid,
    powers: PowersTable,
    factors: Vec<ComplexValue>,
    mons: MonsBuffer,
    sums: Vec<ComplexValue>,
}

impl EvaluationContext {
    pub fn new(sys: &PolynomialSystem, grid: GridConfig) -> Result<Self> {
        Self::from_layout(build_layout(sys)?, grid)
    }

    pub fn from_layout(layout: PackedLayout, grid: GridConfig) -> Result<Self> {
        let grid = Grid::new(grid)?;
        let powers = PowersTable::zeros(layout.n(), layout.d());
        let factors = vec![ComplexValue::new(0.0, 0.0); layout.monomial_count()];
        let mons = MonsBuffer::new(&layout);
        let sums = vec![ComplexValue::new(0.0, 0.0); layout.sum_count()];
        Ok(Self {
            layout,
            grid,
            powers,
            factors,
            mons,
            sums,
        })
    }

    pub fn layout(&self) -> &PackedLayout {
        &self.layout
    }

    pub fn grid(&self) -> GridConfig {
        self.grid.config()
    }

    pub fn mons(&self) -> &MonsBuffer {
        &self.mons
    }

    pub fn powers(&self) -> &PowersTable {
        &self.powers
    }

    pub fn factors(&self) -> &[ComplexValue] {
        &self.factors
    }

    pub fn evaluate(&mut self, point: &EvaluationPoint) -> Result<EvaluationResult> {
        self.run::<()>(point)?;
        Ok(self.collect())
    }

    /// Evaluates and reports the number of complex multiplications per stage.
    pub fn evaluate_counted(
        &mut self,
        point: &EvaluationPoint,
    ) -> Result<(EvaluationResult, MultCounter)> {
        let counts = self.run::<MulCount>(point)?;
        Ok((self.collect(), counts))
    }

    /// Evaluates each point `repeat` times, collecting every result.
    pub fn evaluate_batch(
        &mut self,
        points: &[EvaluationPoint],
        repeat: usize,
    ) -> Result<(Vec<EvaluationResult>, BatchReport)> {
        let mut results = Vec::with_capacity(points.len() * repeat);
        let report = self.run_batch(points, repeat, |_, r| results.push(r.clone()))?;
        Ok((results, report))
    }

    /// Batch evaluation that hands each result to `sink` instead of keeping it.
    /// The sink runs outside the timed region.
    pub fn run_batch<F>(&mut self, points: &[EvaluationPoint], repeat: usize, mut sink: F) -> Result<BatchReport>
    where
        F: FnMut(usize, &EvaluationResult),
    {
        if repeat == 0 {
            return Err(Error::InvalidParameter("repeat must be at least 1".into()));
        }
        for p in points {
            self.check_point(p)?;
        }
        let mut wall = Duration::ZERO;
        let mut mults = MultCounter::default();
        let n = self.layout.n();
        let mut out = EvaluationResult::new(
            n,
            vec![ComplexValue::new(0.0, 0.0); n],
            vec![ComplexValue::new(0.0, 0.0); n * n],
        )?;
        for (idx, point) in points.iter().enumerate() {
            for _ in 0..repeat {
                let start = Instant::now();
                mults += self.run::<MulCount>(point)?;
                self.collect_into(&mut out);
                wall += start.elapsed();
                sink(idx, &out);
            }
        }
        Ok(BatchReport {
            evaluations: points.len() * repeat,
            wall,
            mults,
        })
    }

    fn check_point(&self, point: &EvaluationPoint) -> Result<()> {
        if point.len() != self.layout.n() {
            return Err(Error::DimensionMismatch {
                what: "point dimension",
                expected: self.layout.n(),
                found: point.len(),
            });
        }
        Ok(())
    }

    fn run<T: Tally + Default + Send>(
        &mut self,
        point: &EvaluationPoint,
    ) -> Result<MultCounter> {
        self.check_point(point)?;
        let (n, m, k) = (self.layout.n(), self.layout.m(), self.layout.k());
        let coords = point.coords();
        let layout = &self.layout;
        let grid = &self.grid;
        let mut counts = MultCounter::default();
        let sum_tally = |states: Vec<T>| states.iter().map(Tally::count).sum::<u64>();

        // stage 1a: one power chain per variable
        let width = self.powers.d();
        {
            let rows = Scatter::new(self.powers.as_mut_slice());
            let (_, states) = grid.launch(n, T::default, |tally, i| {
                // SAFETY: thread i owns row i
                let row = unsafe { rows.chunk(i * width, width) };
                fill_powers_row(coords[i], row, tally);
            })?;
            counts.powers = sum_tally(states);
        }

        // stage 1b: one common factor per monomial
        {
            let powers = &self.powers;
            let factors = Scatter::new(&mut self.factors);
            let (_, states) = grid.launch(n * m, T::default, |tally, s| {
                let f = common_factor(
                    layout.monomial_positions(s),
                    layout.monomial_exponents(s),
                    powers,
                    tally,
                );
                // SAFETY: thread s owns factor s
                unsafe { factors.write(s, f) };
            })?;
            counts.factors = sum_tally(states);
        }

        // stage 2: monomial values and derivatives, scattered into Mons
        {
            let factors = &self.factors;
            let mons = Scatter::new(self.mons.slots_mut());
            let init = || (ThreadWorkspace::new(k), T::default());
            let (_, states) = grid.launch(n * m, init, |(ws, tally), s| {
                stage2_term(s, layout, coords, factors[s], ws, tally, |slot, v| {
                    // SAFETY: mons slots of distinct (monomial, variable) pairs are
                    // distinct because supports have strictly increasing positions,
                    // which build_layout enforces
                    unsafe { mons.write(slot, v) }
                });
            })?;
            counts.terms = states.iter().map(|(_, t)| t.count()).sum();
        }

        // stage 3: n^2 + n sums of m terms
        {
            let mons = self.mons.slots();
            let sums = Scatter::new(&mut self.sums);
            grid.launch(n * n + n, || (), |_, t| {
                // SAFETY: thread t owns sum t
                unsafe { sums.write(t, stage3_sum(t, mons, n, m)) };
            })?;
        }
        Ok(counts)
    }

    fn collect(&self) -> EvaluationResult {
        let n = self.layout.n();
        let mut out = EvaluationResult::new(
            n,
            vec![ComplexValue::new(0.0, 0.0); n],
            vec![ComplexValue::new(0.0, 0.0); n * n],
        )
        .expect("sizes match");
        self.collect_into(&mut out);
        out
    }

    /// Sum `t < n` is value `t`; sum `(i + 1) n + p` is Jacobian entry `(p, i)`.
    fn collect_into(&self, out: &mut EvaluationResult) {
        let n = self.layout.n();
        out.values_mut().copy_from_slice(&self.sums[..n]);
        let jac = out.jacobian_mut();
        for i in 0..n {
            for p in 0..n {
                jac[p * n + i] = self.sums[(i + 1) * n + p];
            }
        }
    }
}
