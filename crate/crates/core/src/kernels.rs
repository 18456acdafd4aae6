//! Per-thread procedures of the three evaluation stages.
//!
//! Each procedure is a pure function of a thread id and read-only inputs that
//! produces values for slots it alone owns. Complex multiplications go through
//! [`cmul`] so a [`Tally`] can count them; the unit tally `()` compiles away.

use std::ops::AddAssign;

use crate::packing::{mons_slot_unchecked, PackedLayout, TermKind};
use crate::system::{ComplexValue, EvaluationPoint};

const ONE: ComplexValue = ComplexValue::new(1.0, 0.0);
const ZERO: ComplexValue = ComplexValue::new(0.0, 0.0);

/// Sink for complex-multiplication events.
pub trait Tally {
    fn tick(&mut self);

    fn count(&self) -> u64;
}

impl Tally for () {
    #[inline(always)]
    fn tick(&mut self) {}

    fn count(&self) -> u64 {
        0
    }
}

/// Counts complex multiplications.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MulCount(pub u64);

impl Tally for MulCount {
    #[inline(always)]
    fn tick(&mut self) {
        self.0 += 1;
    }

    fn count(&self) -> u64 {
        self.0
    }
}

/// Complex multiplications per stage, summed over all threads.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MultCounter {
    /// Power chains, `max(d - 2, 0)` per variable.
    pub powers: u64,
    /// Common factors, `k - 1` per monomial.
    pub factors: u64,
    /// Term threads, `5k - 4` per monomial when `k >= 3`.
    pub terms: u64,
    /// Summation threads perform no multiplications.
    pub sums: u64,
}

impl MultCounter {
    pub fn total(&self) -> u64 {
        self.powers + self.factors + self.terms + self.sums
    }

    pub fn scaled(&self, times: u64) -> Self {
        Self {
            powers: self.powers * times,
            factors: self.factors * times,
            terms: self.terms * times,
            sums: self.sums * times,
        }
    }
}

impl AddAssign for MultCounter {
    fn add_assign(&mut self, rhs: Self) {
        self.powers += rhs.powers;
        self.factors += rhs.factors;
        self.terms += rhs.terms;
        self.sums += rhs.sums;
    }
}

/// Closed-form multiplication count of one evaluation for `k >= 3`.
pub fn predicted_mults(n: usize, m: usize, k: usize, d: u32) -> u64 {
    let (n, m, k) = (n as u64, m as u64, k as u64);
    n * (d as u64).saturating_sub(2) + n * m * (k - 1) + n * m * (5 * k - 4)
}

/// `a * b` as four real products and two additions in a fixed order.
#[inline(always)]
pub fn cmul<T: Tally>(tally: &mut T, a: ComplexValue, b: ComplexValue) -> ComplexValue {
    tally.tick();
    ComplexValue::new(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re)
}

/// Powers `x_i^e` for `e` in `[0, d - 1]`, one row of length `d` per variable.
#[derive(Clone, Debug, PartialEq)]
pub struct PowersTable {
    n: usize,
    d: usize,
    table: Vec<ComplexValue>,
}

impl PowersTable {
    pub fn zeros(n: usize, d: u32) -> Self {
        let d = d as usize;
        Self {
            n,
            d,
            table: vec![ZERO; n * d],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline(always)]
    pub fn get(&self, var: usize, exp: usize) -> ComplexValue {
        self.table[var * self.d + exp]
    }

    pub fn row(&self, var: usize) -> &[ComplexValue] {
        &self.table[var * self.d..(var + 1) * self.d]
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [ComplexValue] {
        &mut self.table
    }
}

/// Fills one row of the powers table by a sequential chain:
/// `row[0] = 1`, `row[1] = x`, `row[e] = row[e - 1] * x`.
#[inline]
pub fn fill_powers_row<T: Tally>(x: ComplexValue, row: &mut [ComplexValue], tally: &mut T) {
    if let Some(first) = row.first_mut() {
        *first = ONE;
    }
    if row.len() > 1 {
        row[1] = x;
    }
    for e in 2..row.len() {
        row[e] = cmul(tally, row[e - 1], x);
    }
}

/// Powers table of `point` up to exponent `d - 1`.
pub fn stage1_powers<T: Tally>(point: &EvaluationPoint, d: u32, tally: &mut T) -> PowersTable {
    let mut powers = PowersTable::zeros(point.len(), d);
    let width = powers.d;
    if width > 0 {
        for (x, row) in point
            .coords()
            .iter()
            .zip(powers.table.chunks_exact_mut(width))
        {
            fill_powers_row(*x, row, tally);
        }
    }
    powers
}

/// Common factor `prod_j x_{i_j}^{a_{i_j} - 1}` of monomial `s`, using `k - 1` multiplications.
#[inline]
pub fn stage1_common_factor<T: Tally>(
    layout: &PackedLayout,
    s: usize,
    powers: &PowersTable,
    tally: &mut T,
) -> ComplexValue {
    common_factor(
        layout.monomial_positions(s),
        layout.monomial_exponents(s),
        powers,
        tally,
    )
}

/// Common factor from raw position and `exponent - 1` bytes.
#[inline]
pub fn common_factor<T: Tally>(
    positions: &[u8],
    exponents: &[u8],
    powers: &PowersTable,
    tally: &mut T,
) -> ComplexValue {
    let mut pairs = positions.iter().zip(exponents);
    let Some((&p0, &e0)) = pairs.next() else {
        return ONE;
    };
    let mut acc = powers.get(p0 as usize, e0 as usize);
    for (&p, &e) in pairs {
        acc = cmul(tally, acc, powers.get(p as usize, e as usize));
    }
    acc
}

/// Per-thread scratch: `k + 1` slots `L` and the backward product `Q`.
#[derive(Clone, Debug)]
pub struct ThreadWorkspace {
    pub l: Vec<ComplexValue>,
    pub q: ComplexValue,
}

impl ThreadWorkspace {
    pub fn new(k: usize) -> Self {
        Self {
            l: vec![ZERO; k + 1],
            q: ZERO,
        }
    }
}

/// Gradient of the product `vals[0] * ... * vals[k-1]`, written to `ws.l[0..k]`.
///
/// For `k >= 3` this takes exactly `3k - 6` multiplications.
pub fn speelpenning_gradient<T: Tally>(
    vals: &[ComplexValue],
    ws: &mut ThreadWorkspace,
    tally: &mut T,
) {
    speelpenning_with(vals.len(), |j| vals[j], ws, tally);
}

/// Schedule: forward products `x_1 ... x_r` land in `L[r]` (0-based), then a
/// backward product `Q` sweeps from `x_k` down, completing `L[k-2]` .. `L[1]`
/// with one multiplication each, and the last `Q * x_2` gives `L[0]`.
#[inline(always)]
fn speelpenning_with<T: Tally, V: Fn(usize) -> ComplexValue>(
    k: usize,
    val: V,
    ws: &mut ThreadWorkspace,
    tally: &mut T,
) {
    let l = &mut ws.l;
    match k {
        0 => {}
        1 => l[0] = ONE,
        2 => {
            l[0] = val(1);
            l[1] = val(0);
        }
        _ => {
            l[1] = val(0);
            for r in 1..=k - 2 {
                l[r + 1] = cmul(tally, l[r], val(r));
            }
            // l[k-1] now holds the derivative with respect to the last variable
            let mut q = val(k - 1);
            l[k - 2] = cmul(tally, l[k - 2], q);
            for r in 1..=k - 3 {
                q = cmul(tally, q, val(k - 1 - r));
                l[k - r - 2] = cmul(tally, l[k - r - 2], q);
            }
            q = cmul(tally, q, val(1));
            l[0] = q;
            ws.q = q;
        }
    }
}

/// Evaluates monomial `s` and its `k` derivatives, scales them by their
/// coefficients, and hands each `(mons slot, term)` pair to `write`.
///
/// Uses `5k - 4` multiplications for `k >= 3`: the product gradient,
/// `k` by the common factor, one for the monomial value, `k + 1` by coefficients.
#[inline]
pub fn stage2_term<T: Tally, W: FnMut(usize, ComplexValue)>(
    s: usize,
    layout: &PackedLayout,
    coords: &[ComplexValue],
    factor: ComplexValue,
    ws: &mut ThreadWorkspace,
    tally: &mut T,
    mut write: W,
) {
    let (n, m, k) = (layout.n(), layout.m(), layout.k());
    let positions = layout.monomial_positions(s);
    let val = |j: usize| coords[positions[j] as usize];

    speelpenning_with(k, val, ws, tally);
    let l = &mut ws.l;
    for slot in l.iter_mut().take(k) {
        *slot = cmul(tally, *slot, factor);
    }
    l[k] = if k == 0 {
        factor
    } else {
        cmul(tally, l[k - 1], val(k - 1))
    };
    for (j, term) in l.iter_mut().enumerate() {
        *term = cmul(tally, *term, layout.coeff(j, s));
    }

    for (j, &var) in positions.iter().enumerate() {
        write(
            mons_slot_unchecked(s, TermKind::Derivative(var as usize), n, m),
            l[j],
        );
    }
    write(mons_slot_unchecked(s, TermKind::Value, n, m), l[k]);
}

/// Sum of the `m` terms `mons[t + j (n^2 + n)]`, in ascending `j`.
#[inline]
pub fn stage3_sum(t: usize, mons: &[ComplexValue], n: usize, m: usize) -> ComplexValue {
    let stride = n * n + n;
    let mut acc = ZERO;
    for j in 0..m {
        acc += mons[t + j * stride];
    }
    acc
}
