//! Evaluation of sparse polynomial systems and their Jacobians through a
//! three-stage data-parallel pipeline run on a virtual thread-block grid.
//!
//! 1. Powers of every variable and one common factor `x^(a-1)` per monomial.
//! 2. One thread per monomial: the gradient of the product of its variables,
//!    scaled by the common factor, the monomial value, and coefficient products,
//!    scattered into a padded term buffer.
//! 3. One thread per output sum, adding exactly `m` terms at a fixed stride.
//!
//! [`oracle`] holds an independent brute-force evaluator to check against.

pub mod bench;
pub mod engine;
pub mod error;
pub mod format;
pub mod kernels;
pub mod oracle;
pub mod packing;
pub mod system;

pub use engine::{run_grid, BatchReport, EvaluationContext, Grid, GridConfig, LaunchShape};
pub use error::{Error, Result};
pub use kernels::{MulCount, MultCounter, PowersTable, ThreadWorkspace};
pub use oracle::{compare, naive_evaluate, naive_jacobian, ComparisonReport};
pub use packing::{build_layout, mons_slot, zero_mask, MonsBuffer, PackedLayout, TermKind};
pub use system::{
    random_system, validate_system, ComplexValue, EvaluationPoint, EvaluationResult,
    MonomialSupport, PolynomialSystem, Term, ValidationReport,
};
