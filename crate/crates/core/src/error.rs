use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigenvalue routine did not converge for {0}")]
    NoConvergence(String),

    #[error(
        "{what} is not positive semi-definite: smallest eigenvalue {min_eigenvalue:e} below tolerance {tolerance:e}"
    )]
    NotPositiveSemidefinite {
        what: String,
        min_eigenvalue: f64,
        tolerance: f64,
    },

    #[error("function `{name}` is not admissible here: {reason}")]
    InadmissibleFunction { name: String, reason: String },

    #[error("degenerate sketch: {0}")]
    DegenerateSketch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("bound violated: {0}")]
    BoundViolation(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Whether the error stems from user input (configuration, arguments)
    /// rather than from the computation itself.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse(_) | Error::InvalidArgument(_) | Error::InadmissibleFunction { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
