use std::path::PathBuf;
use thiserror::Error;

/// Error type shared by the whole crate. The CLI maps these onto process
/// exit codes: configuration and input problems exit 2, numerical failures
/// exit 3, verification failures exit 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("threshold error: {0}")]
    Threshold(String),

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Evaluation requested on the measure-zero kink curve where the
    /// piecewise families are only C^1.
    #[error("evaluation at the kink: s = {s}, t = {t}")]
    Kink { s: f64, t: f64 },

    /// Bug sentinel: a selector recipe produced parameters that fail their
    /// own predicates. Must not occur.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("step budget exhausted after {steps} steps at t = {t}")]
    Budget { steps: u64, t: f64 },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Exit code the CLI uses when this error aborts a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) | Error::Budget { .. } | Error::Internal(_) => 3,
            _ => 2,
        }
    }
}
