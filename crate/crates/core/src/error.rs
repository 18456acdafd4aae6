use thiserror::Error;

use crate::system::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid system: {}", join(.0))]
    InvalidSystem(Vec<Violation>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("system does not fit the byte encoding: {0}")]
    Encoding(String),

    #[error("slot index out of range: {0}")]
    OutOfRange(String),

    #[error("kernel panicked: {0}")]
    KernelPanic(String),

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join(violations: &[Violation]) -> String {
    let mut out = violations
        .iter()
        .take(5)
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ");
    if violations.len() > 5 {
        out.push_str(&format!("; and {} more", violations.len() - 5));
    }
    out
}
