use serde::Serialize;
use thiserror::Error;

use crate::rewriter::Candidate;

/// A byte range in some source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn at(offset: usize) -> Self {
        Span { start: offset, end: offset }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message} (expected one of: {})", expected.join(", "))]
    Syntax {
        offset: usize,
        message: String,
        expected: Vec<String>,
    },

    #[error("unknown function `{name}` at byte {offset}; supported: {}", supported.join(", "))]
    UnknownFunction {
        name: String,
        offset: usize,
        supported: Vec<&'static str>,
    },

    #[error("`{name}` takes {expected} argument(s), got {found} (byte {offset})")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        offset: usize,
    },

    #[error("outside supported subset: {0}")]
    Unsupported(String),

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("no valid input points: {0}")]
    EmptySample(String),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("job `{0}` not found")]
    JobNotFound(String),

    #[error("{kind} `{id}` not found")]
    NotFound { kind: &'static str, id: String },

    #[error("search exceeded its {budget_ms} ms budget ({} partial result(s))", partial.len())]
    Timeout {
        budget_ms: u64,
        partial: Vec<Candidate>,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("derivation diverges at step {step}: {message}")]
    Divergence { step: usize, message: String },

    #[error("snapshot: {0}")]
    Snapshot(String),
}

impl Error {
    /// Stable machine-readable code used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Syntax { .. } | Error::UnknownFunction { .. } | Error::Arity { .. } => {
                "parse_error"
            }
            Error::Unsupported(_) => "unsupported_construct",
            Error::UnboundVariable(_) => "unbound_variable",
            Error::InvalidRange(_) | Error::InvalidPoint(_) => "invalid_range",
            Error::EmptySample(_) => "empty_sample",
            Error::JobNotFound(_) => "job_not_found",
            Error::NotFound { .. } => "not_found",
            Error::Timeout { .. } => "timeout",
            Error::Degenerate(_) => "degenerate",
            Error::Divergence { .. } => "divergence",
            Error::Snapshot(_) => "internal",
        }
    }

    pub fn span(&self) -> Option<Span> {
        match self {
            Error::Syntax { offset, .. }
            | Error::UnknownFunction { offset, .. }
            | Error::Arity { offset, .. } => Some(Span::at(*offset)),
            _ => None,
        }
    }

    /// True for errors caused by the caller's input rather than the tool.
    pub fn is_usage(&self) -> bool {
        !matches!(self, Error::Snapshot(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
