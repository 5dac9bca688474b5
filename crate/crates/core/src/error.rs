use thiserror::Error;

/// Errors raised by the averaging, systems, measures and equicontinuity layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index out of range: window ({m}, {n}] on a trace of length {len}")]
    Window { m: usize, n: usize, len: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("point does not belong to a {expected} system")]
    KindMismatch { expected: &'static str },

    #[error("value {value} exceeds declared trace bound {bound}")]
    Bound { value: f64, bound: f64 },

    #[error("degenerate sampler: {0}")]
    DegenerateSampler(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
