//! Error type shared by all modules.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("model invalid, hypothesis {hypothesis} violated: {detail}")]
    ModelInvalid { hypothesis: String, detail: String },

    #[error("numerical degeneracy: {0}")]
    Degeneracy(String),

    #[error("eigensolver failed to converge after {iterations} iterations (relative change {rel_change:.3e})")]
    EigenConvergence { iterations: usize, rel_change: f64 },

    #[error("solver failed: {context}; residual trace {trace:?}")]
    Solver { context: String, trace: Vec<f64> },

    #[error("linear solve failed: {0}")]
    Linear(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
