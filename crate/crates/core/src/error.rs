use thiserror::Error;

use crate::exhaust::ExhaustionTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("positivity violated: {0}")]
    Positivity(String),

    #[error("interval ({lower}, {upper}) is unbounded; truncate it first")]
    MustTruncate { lower: f64, upper: f64 },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("matrix structure: {0}")]
    Structure(String),

    #[error("no convergence after {iterations} iterations, last bracket [{lo}, {hi}]")]
    NoConvergence { iterations: usize, lo: f64, hi: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("truncation at radius {radius} failed: {source}")]
    Exhaustion {
        radius: f64,
        partial: Box<ExhaustionTrace>,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Walks through exhaustion wrappers to the error that caused them.
    pub fn root(&self) -> &Error {
        match self {
            Error::Exhaustion { source, .. } => source.root(),
            other => other,
        }
    }
}
