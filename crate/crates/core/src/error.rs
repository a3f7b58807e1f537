use thiserror::Error;

/// Errors raised by the geometry, field, norm and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point outside the domain of {what}: {detail}")]
    OutsideDomain { what: &'static str, detail: String },

    #[error("point lies on an interface or corner circle: {0}")]
    OnInterface(String),

    #[error("unsupported region: {0}")]
    UnsupportedRegion(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn outside(what: &'static str, detail: impl Into<String>) -> Self {
        Error::OutsideDomain {
            what,
            detail: detail.into(),
        }
    }
}
