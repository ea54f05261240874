use std::path::PathBuf;

/// Errors raised by the solvers, oracles and data readers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("shape mismatch: expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("non-finite value encountered in {0}")]
    NumericOverflow(&'static str),

    #[error("residual cache is stale: relative error {rel_err:.3e}")]
    CacheInvalid { rel_err: f64 },

    #[error("step parameter must be positive, got {0}")]
    InvalidStep(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("top-k tracker out of sync with iterate at coordinate {0}")]
    TrackerDesync(usize),

    #[error("inner solver budget of {iterations} iterations exhausted, best certified gap {best_gap:.3e}")]
    BudgetExceeded { iterations: usize, best_gap: f64 },

    #[error(
        "descent inequality violated at iteration {iteration}: \
         lhs {lhs:.17e} > rhs {rhs:.17e} (block Lipschitz estimate too small?)"
    )]
    LipschitzViolation { iteration: usize, lhs: f64, rhs: f64 },

    #[error("line {line}: parse error: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: format error: {msg}")]
    Format { line: usize, msg: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}
