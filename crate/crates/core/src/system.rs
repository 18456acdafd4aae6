//! Polynomial systems with a regular shape: `n` polynomials in `n` variables,
//! `m` terms per polynomial, `k` variables per term, per-variable degree at most `d`.

use std::fmt;

use num_complex::Complex64;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Complex double used for coefficients, coordinates and results.
pub type ComplexValue = Complex64;

/// Largest per-variable degree representable by the byte encoding (`exponent - 1` fits a `u8`).
pub const MAX_DEGREE: u32 = 255;

/// Largest variable count representable by the byte encoding of positions.
pub const MAX_VARIABLES: usize = 256;

/// Variables and exponents of one monomial, 0-based variable indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MonomialSupport {
    positions: Vec<usize>,
    exponents: Vec<u32>,
}

impl MonomialSupport {
    /// Builds a support without checking it; [`validate_system`] reports violations.
    pub fn new(positions: Vec<usize>, exponents: Vec<u32>) -> Self {
        Self {
            positions,
            exponents,
        }
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Exponent of variable `var`, zero if it does not occur.
    pub fn exponent_of(&self, var: usize) -> u32 {
        self.positions
            .iter()
            .position(|&p| p == var)
            .map_or(0, |j| self.exponents[j])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.positions
            .iter()
            .copied()
            .zip(self.exponents.iter().copied())
    }
}

/// One term `coefficient * x^support`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coefficient: ComplexValue,
    pub support: MonomialSupport,
}

/// A square system of `n` polynomials, each with exactly `m` terms.
///
/// Terms are stored polynomial-major: term `g` of polynomial `p` is at
/// index `p * m + g`, which is also its position in the flattened monomial
/// sequence used by the packed layouts.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialSystem {
    n: usize,
    m: usize,
    k: usize,
    d: u32,
    terms: Vec<Term>,
}

impl PolynomialSystem {
    /// Assembles a system. Only the term count is checked here; shape rules are
    /// reported by [`validate_system`].
    pub fn new(n: usize, m: usize, k: usize, d: u32, terms: Vec<Term>) -> Result<Self> {
        if terms.len() != n * m {
            return Err(Error::DimensionMismatch {
                what: "term count",
                expected: n * m,
                found: terms.len(),
            });
        }
        Ok(Self { n, m, k, d, terms })
    }

    /// Like [`PolynomialSystem::new`] but rejects any invariant violation.
    pub fn new_validated(n: usize, m: usize, k: usize, d: u32, terms: Vec<Term>) -> Result<Self> {
        let sys = Self::new(n, m, k, d, terms)?;
        validate_system(&sys).into_result()?;
        Ok(sys)
    }

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

    /// All `n * m` terms, polynomial-major.
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// The `m` terms of polynomial `p`.
    pub fn polynomial(&self, p: usize) -> &[Term] {
        &self.terms[p * self.m..(p + 1) * self.m]
    }

    pub fn term(&self, p: usize, g: usize) -> &Term {
        &self.terms[p * self.m + g]
    }

    pub fn monomial_count(&self) -> usize {
        self.n * self.m
    }
}

/// A point `x = (x_1, ..., x_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationPoint {
    coords: Vec<ComplexValue>,
}

impl EvaluationPoint {
    pub fn new(coords: Vec<ComplexValue>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|c| !is_finite(*c)) {
            return Err(Error::NonFinite(format!("coordinate {}", i + 1)));
        }
        Ok(Self { coords })
    }

    /// Coordinates drawn uniformly from the complex unit box `[-1, 1] x [-1, 1]`.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(n, &mut rng)
    }

    pub fn random_with<R: Rng>(n: usize, rng: &mut R) -> Self {
        let coords = (0..n)
            .map(|_| ComplexValue::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
            .collect();
        Self { coords }
    }

    pub fn coords(&self) -> &[ComplexValue] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// System values and the Jacobian, stored row-major: entry `(p, i)` is `∂f_p/∂x_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationResult {
    n: usize,
    values: Vec<ComplexValue>,
    jacobian: Vec<ComplexValue>,
}

impl EvaluationResult {
    pub fn new(n: usize, values: Vec<ComplexValue>, jacobian: Vec<ComplexValue>) -> Result<Self> {
        if values.len() != n {
            return Err(Error::DimensionMismatch {
                what: "value count",
                expected: n,
                found: values.len(),
            });
        }
        if jacobian.len() != n * n {
            return Err(Error::DimensionMismatch {
                what: "jacobian entry count",
                expected: n * n,
                found: jacobian.len(),
            });
        }
        Ok(Self {
            n,
            values,
            jacobian,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[ComplexValue] {
        &self.values
    }

    pub fn jacobian(&self) -> &[ComplexValue] {
        &self.jacobian
    }

    pub fn jacobian_entry(&self, p: usize, i: usize) -> ComplexValue {
        self.jacobian[p * self.n + i]
    }

    pub fn jacobian_row(&self, p: usize) -> &[ComplexValue] {
        &self.jacobian[p * self.n..(p + 1) * self.n]
    }

    /// Bitwise equality, distinguishing `-0.0` from `0.0`.
    pub fn bit_eq(&self, other: &Self) -> bool {
        let bits = |v: &[ComplexValue]| -> Vec<(u64, u64)> {
            v.iter().map(|c| (c.re.to_bits(), c.im.to_bits())).collect()
        };
        self.n == other.n
            && bits(&self.values) == bits(&other.values)
            && bits(&self.jacobian) == bits(&other.jacobian)
    }

    #[doc(hidden)]
    pub fn values_mut(&mut self) -> &mut [ComplexValue] {
        &mut self.values
    }

    #[doc(hidden)]
    pub fn jacobian_mut(&mut self) -> &mut [ComplexValue] {
        &mut self.jacobian
    }
}

/// A broken shape rule, located by polynomial and term (both 0-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub polynomial: Option<usize>,
    pub term: Option<usize>,
    pub rule: Rule,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    ZeroCoefficient,
    NonFiniteCoefficient,
    SupportLength { expected: usize, found: usize },
    PositionsNotIncreasing,
    PositionOutOfRange { position: usize, n: usize },
    ExponentOutOfRange { exponent: u32, d: u32 },
    TooManyVariablesPerTerm { k: usize, n: usize },
    DegreeOutOfRange { d: u32 },
    NoVariables,
    NoTerms,
    EmptySupport,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::ZeroCoefficient => write!(f, "zero coefficient"),
            Rule::NonFiniteCoefficient => write!(f, "non-finite coefficient"),
            Rule::SupportLength { expected, found } => {
                write!(f, "support has {found} variables, expected k = {expected}")
            }
            Rule::PositionsNotIncreasing => write!(f, "positions not strictly increasing"),
            Rule::PositionOutOfRange { position, n } => {
                write!(f, "position {} out of range [1,{n}]", position + 1)
            }
            Rule::ExponentOutOfRange { exponent, d } => {
                write!(f, "exponent {exponent} out of range [1,{d}]")
            }
            Rule::TooManyVariablesPerTerm { k, n } => write!(f, "k = {k} exceeds n = {n}"),
            Rule::DegreeOutOfRange { d } => write!(f, "degree {d} out of range [1,{MAX_DEGREE}]"),
            Rule::NoVariables => write!(f, "n must be at least 1"),
            Rule::NoTerms => write!(f, "m must be at least 1"),
            Rule::EmptySupport => write!(f, "k must be at least 1"),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.polynomial, self.term) {
            (Some(p), Some(g)) => write!(f, "polynomial {}, term {}: {}", p + 1, g + 1, self.rule),
            (Some(p), None) => write!(f, "polynomial {}: {}", p + 1, self.rule),
            _ => write!(f, "{}", self.rule),
        }
    }
}

/// Outcome of [`validate_system`]; an empty violation list means the system is valid.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidSystem(self.violations))
        }
    }
}

pub(crate) fn is_finite(c: ComplexValue) -> bool {
    c.re.is_finite() && c.im.is_finite()
}

/// Checks every shape invariant and reports each violation with its location.
pub fn validate_system(sys: &PolynomialSystem) -> ValidationReport {
    let mut violations = Vec::new();
    let global = |rule| Violation {
        polynomial: None,
        term: None,
        rule,
    };
    if sys.n == 0 {
        violations.push(global(Rule::NoVariables));
    }
    if sys.m == 0 {
        violations.push(global(Rule::NoTerms));
    }
    if sys.k == 0 {
        violations.push(global(Rule::EmptySupport));
    }
    if sys.k > sys.n {
        violations.push(global(Rule::TooManyVariablesPerTerm { k: sys.k, n: sys.n }));
    }
    if sys.d == 0 || sys.d > MAX_DEGREE {
        violations.push(global(Rule::DegreeOutOfRange { d: sys.d }));
    }

    for (s, term) in sys.terms.iter().enumerate() {
        let (p, g) = (s / sys.m.max(1), s % sys.m.max(1));
        let mut push = |rule| {
            violations.push(Violation {
                polynomial: Some(p),
                term: Some(g),
                rule,
            })
        };
        let c = term.coefficient;
        if !is_finite(c) {
            push(Rule::NonFiniteCoefficient);
        } else if c.re == 0.0 && c.im == 0.0 {
            push(Rule::ZeroCoefficient);
        }
        let supp = &term.support;
        if supp.positions.len() != sys.k || supp.exponents.len() != sys.k {
            push(Rule::SupportLength {
                expected: sys.k,
                found: supp.positions.len().max(supp.exponents.len()),
            });
        }
        if supp.positions.windows(2).any(|w| w[0] >= w[1]) {
            push(Rule::PositionsNotIncreasing);
        }
        for &position in &supp.positions {
            if position >= sys.n {
                push(Rule::PositionOutOfRange { position, n: sys.n });
            }
        }
        for &exponent in &supp.exponents {
            if exponent == 0 || exponent > sys.d {
                push(Rule::ExponentOutOfRange { exponent, d: sys.d });
            }
        }
    }
    ValidationReport { violations }
}

/// Generates a random system of the given shape, deterministic in `seed`.
///
/// Each term draws a uniform `k`-subset of the variables (sorted), exponents
/// uniform in `[1, d]`, and a coefficient with both parts uniform in `[-1, 1]`,
/// redrawn if it is exactly zero.
pub fn random_system(n: usize, m: usize, k: usize, d: u32, seed: u64) -> Result<PolynomialSystem> {
    if n == 0 || m == 0 || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "n, m and k must be positive (n = {n}, m = {m}, k = {k})"
        )));
    }
    if k > n {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds n = {n}")));
    }
    if d == 0 || d > MAX_DEGREE {
        return Err(Error::InvalidParameter(format!(
            "d = {d} out of range [1,{MAX_DEGREE}]"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::with_capacity(n * m);
    for _ in 0..n * m {
        let coefficient = loop {
            let c = ComplexValue::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
            if c.re != 0.0 || c.im != 0.0 {
                break c;
            }
        };
        let mut positions = index::sample(&mut rng, n, k).into_vec();
        positions.sort_unstable();
        let exponents = (0..k).map(|_| rng.gen_range(1..=d)).collect();
        terms.push(Term {
            coefficient,
            support: MonomialSupport::new(positions, exponents),
        });
    }
    PolynomialSystem::new(n, m, k, d, terms)
}
