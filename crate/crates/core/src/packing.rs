//! Flattened read-only layouts consumed by the kernels.
//!
//! Every layout is indexed by the monomial sequence index `s = p * m + g`
//! (term `g` of polynomial `p`). Positions and exponents are byte arrays of
//! length `n * m * k` with slot `s * k + j` describing the `j`-th variable of
//! monomial `s`. The coefficient array is derivative-major: block `j < k`
//! holds `c * a_j` for every monomial, block `k` holds the plain coefficients.

use crate::error::{Error, Result};
use crate::system::{
    validate_system, ComplexValue, MonomialSupport, PolynomialSystem, MAX_DEGREE, MAX_VARIABLES,
};

#[derive(Clone, Debug, PartialEq)]
pub struct PackedLayout {
    n: usize,
    m: usize,
    k: usize,
    d: u32,
    positions: Vec<u8>,
    exponents: Vec<u8>,
    coeffs: Vec<ComplexValue>,
}

impl PackedLayout {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn monomial_count(&self) -> usize {
        self.n * self.m
    }

    /// Number of target sums: `n` values plus `n * n` Jacobian entries.
    pub fn sum_count(&self) -> usize {
        self.n * self.n + self.n
    }

    /// Variable index per slot, length `n * m * k`.
    pub fn positions(&self) -> &[u8] {
        &self.positions
    }

    /// `exponent - 1` per slot, length `n * m * k`.
    pub fn exponents(&self) -> &[u8] {
        &self.exponents
    }

    /// Derivative-major coefficients, length `n * m * (k + 1)`.
    pub fn coeffs(&self) -> &[ComplexValue] {
        &self.coeffs
    }

    pub fn monomial_positions(&self, s: usize) -> &[u8] {
        &self.positions[s * self.k..(s + 1) * self.k]
    }

    pub fn monomial_exponents(&self, s: usize) -> &[u8] {
        &self.exponents[s * self.k..(s + 1) * self.k]
    }

    /// Coefficient multiplying the `j`-th output of monomial `s`; `j == k` is the value term.
    #[inline]
    pub fn coeff(&self, j: usize, s: usize) -> ComplexValue {
        self.coeffs[j * self.n * self.m + s]
    }

    /// Decodes the byte arrays back into the support of monomial `s`.
    pub fn support(&self, s: usize) -> MonomialSupport {
        MonomialSupport::new(
            self.monomial_positions(s)
                .iter()
                .map(|&p| p as usize)
                .collect(),
            self.monomial_exponents(s)
                .iter()
                .map(|&e| e as u32 + 1)
                .collect(),
        )
    }

    /// Size of the positions and exponents arrays together, in bytes.
    pub fn index_footprint_bytes(&self) -> usize {
        self.positions.len() + self.exponents.len()
    }

    /// Overwrites one coefficient slot. Used to inject faults when testing checkers.
    #[doc(hidden)]
    pub fn inject_coeff_fault(&mut self, slot: usize, value: ComplexValue) {
        self.coeffs[slot] = value;
    }
}

/// Packs a validated system. Systems with more than 256 variables or degree
/// above 255 do not fit the byte encoding and are rejected.
pub fn build_layout(sys: &PolynomialSystem) -> Result<PackedLayout> {
    validate_system(sys).into_result()?;
    let (n, m, k, d) = (sys.n(), sys.m(), sys.k(), sys.d());
    if n > MAX_VARIABLES {
        return Err(Error::Encoding(format!(
            "n = {n} exceeds {MAX_VARIABLES} byte-addressable variables"
        )));
    }
    if d > MAX_DEGREE {
        return Err(Error::Encoding(format!("d = {d} exceeds {MAX_DEGREE}")));
    }

    let nm = n * m;
    let mut positions = Vec::with_capacity(nm * k);
    let mut exponents = Vec::with_capacity(nm * k);
    let mut coeffs = vec![ComplexValue::new(0.0, 0.0); nm * (k + 1)];
    for (s, term) in sys.terms().iter().enumerate() {
        for (j, (var, exp)) in term.support.iter().enumerate() {
            positions.push(var as u8);
            exponents.push((exp - 1) as u8);
            coeffs[j * nm + s] = term.coefficient * exp as f64;
        }
        coeffs[k * nm + s] = term.coefficient;
    }

    Ok(PackedLayout {
        n,
        m,
        k,
        d,
        positions,
        exponents,
        coeffs,
    })
}

/// What a Mons slot holds for monomial `s`: its value, or its derivative
/// with respect to global variable `i` (0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermKind {
    Value,
    Derivative(usize),
}

/// Slot of a monomial term in the Mons buffer.
///
/// Block `g` (of size `n^2 + n`) holds the `g`-th terms of all sums; inside a
/// block the first `n` entries are values of polynomials `0..n`, then one
/// group of `n` per derivative variable.
#[inline]
pub fn mons_slot_unchecked(s: usize, kind: TermKind, n: usize, m: usize) -> usize {
    let (p, g) = (s / m, s % m);
    let block = g * (n * n + n);
    match kind {
        TermKind::Value => block + p,
        TermKind::Derivative(i) => block + (i + 1) * n + p,
    }
}

pub fn mons_slot(s: usize, kind: TermKind, n: usize, m: usize) -> Result<usize> {
    if s >= n * m {
        return Err(Error::OutOfRange(format!(
            "monomial index {s} not in [0, {})",
            n * m
        )));
    }
    if let TermKind::Derivative(i) = kind {
        if i >= n {
            return Err(Error::OutOfRange(format!("variable index {i} not in [0, {n})")));
        }
    }
    Ok(mons_slot_unchecked(s, kind, n, m))
}

/// Sorted list of Mons slots that no monomial value or existing-variable
/// derivative maps to; these hold zero permanently.
pub fn zero_mask(layout: &PackedLayout) -> Vec<usize> {
    let claimed = claimed_slots(layout);
    claimed
        .iter()
        .enumerate()
        .filter_map(|(slot, &c)| (!c).then_some(slot))
        .collect()
}

fn claimed_slots(layout: &PackedLayout) -> Vec<bool> {
    let (n, m, k) = (layout.n, layout.m, layout.k);
    let mut claimed = vec![false; (n * n + n) * m];
    for s in 0..n * m {
        claimed[mons_slot_unchecked(s, TermKind::Value, n, m)] = true;
        for j in 0..k {
            let var = layout.positions[s * k + j] as usize;
            claimed[mons_slot_unchecked(s, TermKind::Derivative(var), n, m)] = true;
        }
    }
    claimed
}

/// Expected zero-mask size: `(n^2 + n) m - n m (k + 1)`.
pub fn zero_mask_len(n: usize, m: usize, k: usize) -> usize {
    (n * n + n) * m - n * m * (k + 1)
}

/// The `(n^2 + n) * m` term buffer read by the summation stage.
#[derive(Clone, Debug)]
pub struct MonsBuffer {
    slots: Vec<ComplexValue>,
    zero_mask: Vec<usize>,
}

impl MonsBuffer {
    /// Allocates the buffer with every slot, masked or not, set to zero.
    pub fn new(layout: &PackedLayout) -> Self {
        let len = layout.sum_count() * layout.m;
        Self {
            slots: vec![ComplexValue::new(0.0, 0.0); len],
            zero_mask: zero_mask(layout),
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slots(&self) -> &[ComplexValue] {
        &self.slots
    }

    pub(crate) fn slots_mut(&mut self) -> &mut [ComplexValue] {
        &mut self.slots
    }

    pub fn zero_mask(&self) -> &[usize] {
        &self.zero_mask
    }

    /// True when every masked slot holds `+0.0 + 0.0i` bit for bit.
    pub fn masked_slots_hold_zero(&self) -> bool {
        self.zero_mask
            .iter()
            .all(|&z| self.slots[z].re.to_bits() == 0 && self.slots[z].im.to_bits() == 0)
    }
}
