use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch in layer {layer}: {detail}")]
    Shape { layer: String, detail: String },

    #[error("non-finite gradient for parameter {0}")]
    NonFiniteGradient(String),

    #[error("feature undefined: {0}")]
    UndefinedFeature(String),

    #[error("missing forward cache: {0}")]
    MissingCache(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("truncated file: {0}")]
    Truncated(String),

    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),

    #[error("unsupported layer kind `{0}`")]
    UnsupportedLayer(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn shape(layer: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Shape {
            layer: layer.into(),
            detail: detail.into(),
        }
    }
}
