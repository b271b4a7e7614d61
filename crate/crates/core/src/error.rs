use thiserror::Error;

use crate::model::Violation;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid instance: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("unknown {0}")]
    UnknownName(String),
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeasibilityError {
    #[error("system is feasible, it has no infeasible subsystem")]
    Feasible,
    #[error("constraint references receiver {receiver} / transmitter {server} out of range")]
    OutOfRange { receiver: usize, server: usize },
    #[error("receiver {0} appears with more than one server")]
    DuplicateReceiver(usize),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CutError {
    #[error("cycle has weight {0}, not negative")]
    NotNegative(i64),
    #[error("negative cycle contains no interference arc: power bounds are inconsistent")]
    BoundsOnly,
    #[error("cut repeats transmitter {0}")]
    RepeatedTransmitter(usize),
    #[error("cut repeats receiver {0}")]
    RepeatedReceiver(usize),
    #[error("cut must contain at least one pair")]
    Empty,
}
