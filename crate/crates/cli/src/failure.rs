use std::fmt;
use std::path::Path;

use lqgame::Error;

/// A command failure and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Malformed invocation or input files; exit code 2.
    Usage(String),
    /// The computation ran but reached a negative verdict; exit code 1.
    Domain(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
        }
    }

    /// Maps a library error raised while reading `path`.
    pub fn reading(path: &Path, err: Error) -> Self {
        match err {
            Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => {
                Failure::Usage(format!("file not found: {}", path.display()))
            }
            Error::InvalidGame(msg) => Failure::Domain(format!("{}: invalid game: {msg}", path.display())),
            e => Failure::Usage(format!("{}: {e}", path.display())),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        match err {
            Error::Parse(_) | Error::Json(_) | Error::Dimension(_) => Failure::Usage(err.to_string()),
            e => Failure::Domain(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure::Domain(format!("i/o error: {err}"))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) => write!(f, "usage error: {msg}"),
            Failure::Domain(msg) => write!(f, "error: {msg}"),
        }
    }
}
