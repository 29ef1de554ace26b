use thiserror::Error;

/// Errors produced by the analysis library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    /// A documented precondition of an operation does not hold.
    #[error("contract violated: {0}")]
    Contract(String),

    /// A mathematical constraint required by an analysis is not met
    /// (e.g. the point is not degenerate, or a direction is not admissible).
    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("singular system in {op} (smallest pivot {pivot:e})")]
    Singular { op: &'static str, pivot: f64 },

    #[error("unknown {kind} '{name}', expected one of: {valid}")]
    Lookup {
        kind: &'static str,
        name: String,
        valid: String,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dim_err(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Dimension {
        op,
        detail: detail.into(),
    }
}
