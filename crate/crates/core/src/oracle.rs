//! Brute-force reference evaluation.
//!
//! Works directly on [`PolynomialSystem`] terms: every power is rebuilt by
//! repeated multiplication for every term, and the Jacobian comes from the
//! power rule `d(c x^a)/dx_i = c a_i x^(a - e_i)`. Nothing here touches the
//! packed layouts or the stage kernels.

use std::fmt;

use crate::error::{Error, Result};
use crate::system::{ComplexValue, EvaluationPoint, EvaluationResult, MonomialSupport, PolynomialSystem};

const ZERO: ComplexValue = ComplexValue::new(0.0, 0.0);
const ONE: ComplexValue = ComplexValue::new(1.0, 0.0);

fn power(x: ComplexValue, e: u32) -> ComplexValue {
    let mut acc = ONE;
    for _ in 0..e {
        acc *= x;
    }
    acc
}

/// `x^support`, with the exponent of `skip` lowered by one.
fn monomial(support: &MonomialSupport, x: &[ComplexValue], skip: Option<usize>) -> ComplexValue {
    let mut acc = ONE;
    for (var, exp) in support.iter() {
        let e = if Some(var) == skip { exp - 1 } else { exp };
        acc *= power(x[var], e);
    }
    acc
}

fn check_dims(sys: &PolynomialSystem, point: &EvaluationPoint) {
    assert_eq!(
        sys.n(),
        point.len(),
        "point dimension must match the number of variables"
    );
}

/// Values of all `n` polynomials, terms summed in order.
pub fn naive_evaluate(sys: &PolynomialSystem, point: &EvaluationPoint) -> Vec<ComplexValue> {
    check_dims(sys, point);
    let x = point.coords();
    (0..sys.n())
        .map(|p| {
            sys.polynomial(p).iter().fold(ZERO, |acc, t| {
                acc + t.coefficient * monomial(&t.support, x, None)
            })
        })
        .collect()
}

/// Row-major `n x n` Jacobian by the power rule; entries with no contributing term are exactly zero.
pub fn naive_jacobian(sys: &PolynomialSystem, point: &EvaluationPoint) -> Vec<ComplexValue> {
    check_dims(sys, point);
    let n = sys.n();
    let x = point.coords();
    let mut jac = vec![ZERO; n * n];
    for p in 0..n {
        for t in sys.polynomial(p) {
            for (var, exp) in t.support.iter() {
                let scaled = t.coefficient * exp as f64;
                jac[p * n + var] += scaled * monomial(&t.support, x, Some(var));
            }
        }
    }
    jac
}

/// Central differences with a real step `h` along each coordinate.
pub fn finite_diff_jacobian(
    sys: &PolynomialSystem,
    point: &EvaluationPoint,
    h: f64,
) -> Result<Vec<ComplexValue>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    check_dims(sys, point);
    let n = sys.n();
    let mut jac = vec![ZERO; n * n];
    let mut coords = point.coords().to_vec();
    for i in 0..n {
        let xi = coords[i];
        coords[i] = xi + h;
        let plus = naive_evaluate(sys, &EvaluationPoint::new(coords.clone())?);
        coords[i] = xi - h;
        let minus = naive_evaluate(sys, &EvaluationPoint::new(coords.clone())?);
        coords[i] = xi;
        for p in 0..n {
            jac[p * n + i] = (plus[p] - minus[p]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// `|u - v| / max(|u|, |v|)`, or the absolute error when both are below `1e-300`.
pub fn relative_error(u: ComplexValue, v: ComplexValue) -> f64 {
    let scale = u.norm().max(v.norm());
    let diff = (u - v).norm();
    if scale < 1e-300 {
        diff
    } else {
        diff / scale
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntryLocation {
    Value { polynomial: usize },
    Jacobian { polynomial: usize, variable: usize },
}

impl fmt::Display for EntryLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            EntryLocation::Value { polynomial } => write!(f, "f_{}", polynomial + 1),
            EntryLocation::Jacobian {
                polynomial,
                variable,
            } => write!(f, "df_{}/dx_{}", polynomial + 1, variable + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorstEntry {
    pub location: EntryLocation,
    pub got: ComplexValue,
    pub expected: ComplexValue,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub max_value_error: f64,
    pub max_jacobian_error: f64,
    pub worst: Option<WorstEntry>,
    pub tolerance: f64,
    pub pass: bool,
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: max value error {:.3e}, max jacobian error {:.3e} (tol {:.1e})",
            if self.pass { "pass" } else { "FAIL" },
            self.max_value_error,
            self.max_jacobian_error,
            self.tolerance
        )?;
        if let Some(w) = &self.worst {
            write!(
                f,
                "; worst {} got {} expected {} error {:.3e}",
                w.location, w.got, w.expected, w.error
            )?;
        }
        Ok(())
    }
}

/// Compares a result against the brute-force values and Jacobian.
pub fn compare(
    result: &EvaluationResult,
    sys: &PolynomialSystem,
    point: &EvaluationPoint,
    tol: f64,
) -> Result<ComparisonReport> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let n = sys.n();
    for (what, found) in [("result dimension", result.n()), ("point dimension", point.len())] {
        if found != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                found,
            });
        }
    }
    Ok(compare_parts(
        result.values(),
        result.jacobian(),
        &naive_evaluate(sys, point),
        &naive_jacobian(sys, point),
        tol,
    ))
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Compares values and a row-major Jacobian against expected ones.
pub fn compare_parts(
    values: &[ComplexValue],
    jacobian: &[ComplexValue],
    expected_values: &[ComplexValue],
    expected_jacobian: &[ComplexValue],
    tol: f64,
) -> ComparisonReport {
    let n = expected_values.len();
    let mut worst: Option<WorstEntry> = None;
    let mut track = |location, got, expected| {
        let error = relative_error(got, expected);
        if worst.is_none_or(|w| error > w.error || error.is_nan()) {
            worst = Some(WorstEntry {
                location,
                got,
                expected,
                error,
            });
        }
        error
    };
    let mut max_value_error: f64 = 0.0;
    for (p, (&got, &expected)) in values.iter().zip(expected_values).enumerate() {
        let e = track(EntryLocation::Value { polynomial: p }, got, expected);
        max_value_error = nan_max(max_value_error, e);
    }
    let mut max_jacobian_error: f64 = 0.0;
    for (idx, (&got, &expected)) in jacobian.iter().zip(expected_jacobian).enumerate() {
        let location = EntryLocation::Jacobian {
            polynomial: idx / n,
            variable: idx % n,
        };
        let e = track(location, got, expected);
        max_jacobian_error = nan_max(max_jacobian_error, e);
    }
    // NaN compares false, so it never passes
    let pass = max_value_error <= tol && max_jacobian_error <= tol;
    ComparisonReport {
        max_value_error,
        max_jacobian_error,
        worst,
        tolerance: tol,
        pass,
    }
}
