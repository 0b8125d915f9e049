use thiserror::Error;

/// Library-wide error type.
///
/// The three variants map onto the process exit codes used by the binary:
/// `Config` -> 2, `Numerical` -> 3. Certificate failures are not errors
/// (certificates annotate results, they never abort a run) and are handled
/// separately by the driver.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside the domain an operation is defined on
    /// (negative slope, empty table, non-grid time point, ...).
    #[error("invalid parameter: {0}")]
    Config(String),

    /// An iteration failed to converge or produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
