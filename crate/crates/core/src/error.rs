use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("degenerate MP2 denominator {denominator:e} for occupied ({i}, {j}) -> virtual ({a}, {b})")]
    DegenerateDenominator {
        i: usize,
        j: usize,
        a: usize,
        b: usize,
        denominator: f64,
    },

    #[error("operator is not Hermitian: expectation has imaginary part {0:e}")]
    NotHermitian(f64),

    #[error("eigensolver did not converge: residual {residual:e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("missing data: {0}")]
    Missing(String),

    #[error("least-squares fit is rank deficient: {0}")]
    RankDeficient(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
