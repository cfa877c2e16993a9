use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Error type shared by the library.
///
/// The variants map onto the process exit codes used by the CLI: `Config`
/// exits with 1, data-shaped errors (`Data`, `Io`, `Csv`, `Json`) with 2 and
/// `Partial` with 3.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: unknown variants, out-of-range options,
    /// inconsistent group definitions.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed or inconsistent input data.
    #[error("data error: {0}")]
    Data(String),

    /// Numerical failure inside a fit or a score computation.
    #[error("numerics error: {0}")]
    Numerics(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// Some work units failed while others succeeded; the run produced
    /// usable but incomplete output.
    #[error("partial failure: {failed} of {total} cells failed ({detail})")]
    Partial {
        failed: usize,
        total: usize,
        detail: String,
    },
}

impl Error {
    /// Process exit code the CLI reports for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Partial { .. } => 3,
            _ => 2,
        }
    }
}
