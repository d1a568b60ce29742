use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("L = {length} exceeds the {what} capacity cap of {cap} sites")]
    Capacity {
        what: &'static str,
        length: usize,
        cap: usize,
    },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not unitary (residual {residual:e} above {tolerance:e})")]
    NotUnitary { residual: f64, tolerance: f64 },

    #[error("{0}")]
    Spectrum(String),

    #[error("empty series")]
    EmptySeries,

    #[error("window of {window} exceeds the {available} available samples")]
    WindowTooLarge { window: usize, available: usize },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity { .. })
    }

    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}
