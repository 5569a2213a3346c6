use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numerical,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("series length mismatch: {0}")]
    Misaligned(String),

    #[error("degenerate marker configuration: {0}")]
    Degenerate(String),

    #[error("rotation decomposition is singular (second angle {0:.3} deg)")]
    SingularAttitude(f64),

    #[error("marker gap too long: {0}")]
    GapTooLong(String),

    #[error("no ground contact found above {threshold} N")]
    NoContact { threshold: f64 },

    #[error("{count} separate ground contacts found; expected exactly one")]
    MultipleContacts { count: usize },

    #[error("center of pressure missing during stance at t = {time} s")]
    MissingCop { time: f64 },

    #[error("forward integration diverged at t = {time} s")]
    Divergence { time: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Degenerate(_)
            | Error::SingularAttitude(_)
            | Error::Divergence { .. }
            | Error::Numerical(_) => ErrorKind::Numerical,
            _ => ErrorKind::Input,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
