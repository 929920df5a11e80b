use thiserror::Error;

/// Failures reported by the solvers and the configuration layer.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violates a documented precondition (bad geometry, bad parameters).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A configuration file or override could not be understood.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical method failed to produce a trustworthy answer.
    #[error("solver fault: {message}")]
    SolverFault {
        message: String,
        /// Residual or energy history leading up to the failure, oldest first.
        history: Vec<f64>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {message}")]
    Format { path: String, message: String },
}

impl Error {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn fault(msg: impl Into<String>, history: Vec<f64>) -> Self {
        Error::SolverFault {
            message: msg.into(),
            history,
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Precondition(_) | Error::Config(_) | Error::Format { .. } => 2,
            Error::SolverFault { .. } => 3,
            Error::Io { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
