use thiserror::Error;

use crate::step::{StepId, ValueKind};

/// Errors raised when mutating a construction.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstructionError {
    #[error("unknown input step {0}")]
    UnknownInput(StepId),
    #[error("unknown step {0}")]
    UnknownStep(StepId),
    #[error("{kind} takes {expected} inputs and {expected_params} params, got {got} inputs and {got_params} params")]
    ArityMismatch {
        kind: &'static str,
        expected: usize,
        got: usize,
        expected_params: usize,
        got_params: usize,
    },
    #[error("input {input} of {kind} must be a {expected}, found {found}")]
    KindMismatch {
        kind: &'static str,
        input: StepId,
        expected: ValueKind,
        found: ValueKind,
    },
    #[error("parameters must be finite")]
    NonFiniteParam,
    #[error("step {0} is not a free point")]
    NotFreePoint(StepId),
}

/// Errors raised when parsing the construction file format.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("syntax error: {0}")]
    SyntaxError(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("unsupported format version {0}")]
    VersionUnsupported(u64),
}
