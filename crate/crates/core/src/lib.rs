// Negated float comparisons are deliberate: NaN must fail every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotic;
pub mod bounds;
pub mod certify;
pub mod error;
pub mod optimal;
pub mod quantum;
pub mod shared;
pub mod tree;

pub use error::{Error, Result, ValidationReport, Violation};
pub use tree::*;

/// Default absolute tolerance for numerical comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;
