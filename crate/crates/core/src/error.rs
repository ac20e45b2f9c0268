use alloc::string::String;

/// Errors produced by the feature, training and detection pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("calibration failed for channel group `{group}`: {reason}")]
    Calibration { group: String, reason: String },
    #[error("degenerate training data: {0}")]
    DegenerateData(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn arg(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
