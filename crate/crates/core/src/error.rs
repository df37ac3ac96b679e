use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error categories map one-to-one onto the CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller passed an invalid argument (bad id, bad parameter, oversize input).
    #[error("usage error: {0}")]
    Usage(String),

    /// Malformed input data.
    #[error("input error{}: {message}", LineSuffix(*line))]
    Input {
        line: Option<usize>,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A structural guarantee of the algorithms did not hold.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn input(line: usize, msg: impl Into<String>) -> Self {
        Error::Input {
            line: Some(line),
            message: msg.into(),
        }
    }

    pub fn input_nolines(msg: impl Into<String>) -> Self {
        Error::Input {
            line: None,
            message: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    /// Process exit status: 1 usage, 2 input, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Input { .. } | Error::Io { .. } => 2,
            Error::Invariant(_) => 3,
        }
    }
}

struct LineSuffix(Option<usize>);

impl fmt::Display for LineSuffix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(line) => write!(f, " at line {line}"),
            None => Ok(()),
        }
    }
}
