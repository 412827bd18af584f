use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid range: lo {lo} > hi {hi}")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid lattice size: {0}")]
    InvalidSize(String),

    #[error("invalid composition: {0}")]
    InvalidComposition(String),

    #[error("invalid chartist window: {0}")]
    InvalidWindow(i64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("invalid length: need at least {needed}, got {got}")]
    InvalidLength { needed: usize, got: usize },

    #[error("fit failure: {0}")]
    FitFailure(String),

    #[error("collinear design matrix")]
    Collinearity,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("information accounting residual {residual:e} exceeds tolerance {tolerance:e}")]
    Accounting { residual: f64, tolerance: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("ingestion error: {0}")]
    Ingestion(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors caused by user input (bad config, bad files, bad arguments)
    /// rather than by the numerics of a run.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Ingestion(_) | Error::Io { .. } | Error::InvalidComposition(_)
        )
    }
}
