use std::fmt;

/// Error type shared by every module of the crate.
#[derive(Debug)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    Domain(String),
    /// Mismatched grid or polynomial dimensions.
    Dimension(String),
    /// Integer arithmetic would overflow; never wraps silently.
    Overflow(String),
    /// Operation not available for the requested configuration.
    Unsupported(String),
    /// Linear system or ratio too ill-conditioned to trust.
    IllConditioned(String),
    /// Iterative scheme failed to reach its tolerance.
    Convergence(String),
    /// Malformed text input (config files, harmonic term lists).
    Parse(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Dimension(m) => write!(f, "dimension mismatch: {m}"),
            Error::Overflow(m) => write!(f, "overflow: {m}"),
            Error::Unsupported(m) => write!(f, "unsupported: {m}"),
            Error::IllConditioned(m) => write!(f, "ill-conditioned: {m}"),
            Error::Convergence(m) => write!(f, "convergence failure: {m}"),
            Error::Parse(m) => write!(f, "parse error: {m}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
