use thiserror::Error;

/// Errors shared by every module in the crate.
///
/// The command line tool maps `Config` to its configuration exit code and
/// everything else to the runtime exit code, so constructors should pick the
/// variant by who is at fault: the input file or the computation.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An argument left the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A combinatorial guard tripped (state space or enumeration too large).
    #[error("guard exceeded: {0}")]
    Guard(String),

    /// The run configuration file is malformed or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// A numeric routine failed to converge to the requested tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
