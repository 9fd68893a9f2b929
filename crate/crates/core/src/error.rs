use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input: bad indices, mismatched shapes,
    /// invalid hyperparameters.
    #[error("{0}")]
    Input(String),

    /// A problem in an input file, located by file and (1-based) line.
    #[error("{file}:{line}: {message}")]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    /// Power iteration did not reach the requested residual.
    #[error(
        "spectral estimate did not converge after {iterations} iterations \
         (estimate {estimate}, residual {residual:e})"
    )]
    NoConvergence {
        estimate: f64,
        residual: f64,
        iterations: usize,
    },

    /// A numerical routine failed in a way that indicates a bug or a
    /// non-finite input.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("graph with {n} nodes is too large for a dense eigensolve (limit {limit})")]
    TooLarge { n: usize, limit: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn parse(file: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 for input problems, 2 for numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Parse { .. } | Error::TooLarge { .. } | Error::Io { .. } => 1,
            Error::NoConvergence { .. } | Error::Numerical(_) => 2,
        }
    }
}
