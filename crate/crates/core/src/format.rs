//! Text format for polynomial systems.
//!
//! ```text
//! # comments and blank lines are ignored
//! n m k d
//! re im pos exp pos exp ...      (n * m term lines, polynomial-major)
//! ```
//!
//! Positions are 1-based and strictly increasing within a line. Floats are
//! written in shortest round-trip scientific notation, so a write/read cycle
//! preserves every coefficient bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::system::{
    validate_system, ComplexValue, MonomialSupport, PolynomialSystem, Rule, Term, MAX_DEGREE,
};

pub fn format_system(sys: &PolynomialSystem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {} {}", sys.n(), sys.m(), sys.k(), sys.d());
    for term in sys.terms() {
        let _ = write!(out, "{:e} {:e}", term.coefficient.re, term.coefficient.im);
        for (var, exp) in term.support.iter() {
            let _ = write!(out, " {} {}", var + 1, exp);
        }
        out.push('\n');
    }
    out
}

pub fn write_system(sys: &PolynomialSystem, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_system(sys))?;
    Ok(())
}

pub fn read_system(path: impl AsRef<Path>) -> Result<PolynomialSystem> {
    parse_system(&fs::read_to_string(path)?)
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

fn parse_field<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| format_err(line, format!("cannot parse {what} from {tok:?}")))
}

pub fn parse_system(text: &str) -> Result<PolynomialSystem> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines
        .next()
        .ok_or_else(|| format_err(1, "missing header line `n m k d`"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(format_err(hline, "header must be `n m k d`"));
    }
    let n: usize = parse_field(fields[0], hline, "n")?;
    let m: usize = parse_field(fields[1], hline, "m")?;
    let k: usize = parse_field(fields[2], hline, "k")?;
    let d: u32 = parse_field(fields[3], hline, "d")?;
    if n == 0 || m == 0 || k == 0 || k > n {
        return Err(format_err(hline, format!("need 1 <= k <= n and m >= 1, got n={n} m={m} k={k}")));
    }
    if d == 0 || d > MAX_DEGREE {
        return Err(format_err(hline, format!("degree {d} out of range [1,{MAX_DEGREE}]")));
    }

    let mut terms = Vec::with_capacity(n * m);
    let mut last_line = hline;
    for (line, body) in lines {
        last_line = line;
        if terms.len() == n * m {
            return Err(format_err(line, format!("more than n*m = {} term lines", n * m)));
        }
        terms.push(parse_term(body, line, n, k, d)?);
    }
    if terms.len() != n * m {
        return Err(format_err(
            last_line,
            format!("expected {} term lines, found {}", n * m, terms.len()),
        ));
    }
    let sys = PolynomialSystem::new(n, m, k, d, terms)?;
    validate_system(&sys).into_result()?;
    Ok(sys)
}

fn parse_term(body: &str, line: usize, n: usize, k: usize, d: u32) -> Result<Term> {
    let toks: Vec<&str> = body.split_whitespace().collect();
    if toks.len() != 2 + 2 * k {
        return Err(format_err(
            line,
            format!("expected {} fields (re im and {k} pos/exp pairs), found {}", 2 + 2 * k, toks.len()),
        ));
    }
    let re: f64 = parse_field(toks[0], line, "real part")?;
    let im: f64 = parse_field(toks[1], line, "imaginary part")?;
    let coefficient = ComplexValue::new(re, im);
    if !re.is_finite() || !im.is_finite() {
        return Err(format_err(line, Rule::NonFiniteCoefficient.to_string()));
    }
    if re == 0.0 && im == 0.0 {
        return Err(format_err(line, Rule::ZeroCoefficient.to_string()));
    }

    let mut positions = Vec::with_capacity(k);
    let mut exponents = Vec::with_capacity(k);
    for pair in toks[2..].chunks_exact(2) {
        let pos: usize = parse_field(pair[0], line, "position")?;
        let exp: u32 = parse_field(pair[1], line, "exponent")?;
        if pos == 0 || pos > n {
            return Err(format_err(line, format!("position {pos} out of range [1,{n}]")));
        }
        if exp == 0 || exp > d {
            return Err(format_err(line, format!("exponent {exp} out of range [1,{d}]")));
        }
        if let Some(&prev) = positions.last() {
            if pos - 1 == prev {
                return Err(format_err(line, format!("duplicate variable index {pos}")));
            }
            if pos - 1 < prev {
                return Err(format_err(line, Rule::PositionsNotIncreasing.to_string()));
            }
        }
        positions.push(pos - 1);
        exponents.push(exp);
    }
    Ok(Term {
        coefficient,
        support: MonomialSupport::new(positions, exponents),
    })
}
