use std::fmt;

use crate::tree::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single reason a node array fails to be a coin game.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// The array does not have `2^(n+1) - 1` entries.
    Shape { expected: usize, found: usize },
    /// An interior coin bias outside `[0, 1]`.
    Range { node: NodeId, value: f64 },
    /// A leaf that is not exactly `0.0` or `1.0`.
    Leaf { node: NodeId, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape { expected, found } => {
                write!(f, "ShapeError: expected {expected} node values, found {found}")
            }
            Violation::Range { node, value } => {
                write!(f, "RangeError at node \"{node}\": interior value {value} outside [0, 1]")
            }
            Violation::Leaf { node, value } => {
                write!(f, "LeafError at node \"{node}\": leaf value {value} is not exactly 0 or 1")
            }
        }
    }
}

/// Outcome of [`crate::tree::validate`]; empty means the array is a valid game.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid coin game:\n{0}")]
    Validation(ValidationReport),
    #[error("DegenerateGame: honest Bob-win probability H_r = {h_root} must lie strictly inside (0, 1)")]
    DegenerateGame { h_root: f64 },
    #[error("DepthError: {0}")]
    Depth(String),
    #[error("DomainError: {0}")]
    Domain(String),
    #[error("ParityError: n = {n} must be even")]
    Parity { n: usize },
    #[error("ScheduleError: {0}")]
    Schedule(String),
    #[error("StepError: {0}")]
    Step(String),
    #[error("StepOrderError: expected {expected}, got {got}")]
    StepOrder { expected: String, got: String },
    #[error("SizeError: depth {depth} exceeds the configured limit {limit}")]
    Size { depth: usize, limit: usize },
    #[error("ConstraintViolation: {constraint} deviates by {deviation:e} (tolerance {tol:e})")]
    ConstraintViolation { constraint: String, deviation: f64, tol: f64 },
    #[error("BisectionFailure: no C_{level} <= {limit:e} makes the level-{level} inequality PSD")]
    BisectionFailure { level: usize, limit: f64 },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation(_))
    }
}
