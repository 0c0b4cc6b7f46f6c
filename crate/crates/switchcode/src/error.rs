use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Core(#[from] switchcode_core::Error),
}

/// Failure classes reported through the process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Divergence,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Divergence => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Config => "config",
            ErrorKind::Data => "data",
            ErrorKind::Divergence => "divergence",
        }
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        use switchcode_core::Error as E;
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Data(_) | Error::Io { .. } => ErrorKind::Data,
            Error::Core(e) => match e {
                E::Divergence { .. } => ErrorKind::Divergence,
                E::InvalidArgument(_) | E::InvalidModel(_) | E::NotPsd { .. } | E::NotSymmetric { .. } => {
                    ErrorKind::Config
                }
                _ => ErrorKind::Data,
            },
        }
    }

    /// One-line JSON record for stderr.
    pub fn to_json_line(&self) -> String {
        let kind = self.kind();
        serde_json::json!({
            "error": kind.as_str(),
            "exit_code": kind.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}
