use thiserror::Error;

/// Errors produced by the library. Every variant names the operation that
/// failed so callers (and the CLI) can report precisely where a computation
/// broke down.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("{operation}: size limit exceeded ({what} = {got}, maximum {max})")]
    SizeLimit {
        operation: &'static str,
        what: &'static str,
        got: usize,
        max: usize,
    },

    #[error("{operation}: divergent integral for family {family}")]
    Divergence {
        operation: &'static str,
        family: String,
    },

    #[error("{operation}: unsupported for {what}")]
    Unsupported {
        operation: &'static str,
        what: String,
    },

    #[error("{operation}: degenerate model, total seating weight is zero at step {step}")]
    DegenerateWeights { operation: &'static str, step: usize },

    #[error("{operation}: numeric failure: {detail}")]
    Numeric {
        operation: &'static str,
        detail: String,
    },

    #[error("{operation}: invalid parameter {name} = {value}: {constraint}")]
    InvalidParameter {
        operation: &'static str,
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("{operation}: empty input ({what})")]
    EmptyInput {
        operation: &'static str,
        what: &'static str,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(
        operation: &'static str,
        name: &'static str,
        value: f64,
        constraint: &'static str,
    ) -> Self {
        Error::InvalidParameter {
            operation,
            name,
            value,
            constraint,
        }
    }

    pub fn numeric(operation: &'static str, detail: impl Into<String>) -> Self {
        Error::Numeric {
            operation,
            detail: detail.into(),
        }
    }
}
