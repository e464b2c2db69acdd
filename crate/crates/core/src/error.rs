use thiserror::Error;

/// Errors produced by the bicomplex, fractional and verification layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature error: {0}")]
    Quadrature(String),
    #[error("finite-difference step error: {0}")]
    Step(String),
    #[error("zero divisor: exactly one idempotent component vanishes")]
    ZeroDivisor,
    #[error("division by zero: both idempotent components vanish")]
    Zero,
    #[error("probe list is empty")]
    EmptyProbes,
    #[error("kernel argument is not invertible")]
    NotInvertible,
    #[error("unsupported weights: {0}")]
    UnsupportedWeights(String),
    #[error("evaluation point lies on the patch boundary")]
    WOnBoundary,
    #[error("config error{}: {message}", location(.line, .field))]
    Config {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },
    #[error("expression error at offset {offset}: {message}")]
    Expr { offset: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

fn location(line: &Option<usize>, field: &Option<String>) -> String {
    match (line, field) {
        (Some(l), Some(f)) => format!(" (line {l}, field `{f}`)"),
        (Some(l), None) => format!(" (line {l})"),
        (None, Some(f)) => format!(" (field `{f}`)"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            line: None,
            field: Some(field.into()),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
