//! Error type shared by every module.

use alloc::string::String;

/// Failure classes. The CLI maps each class to its own exit code.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The model itself is unusable for the request (non-integrable measure, no jumps, ...).
    #[error("model error: {0}")]
    Model(String),
    /// A numerical method did not reach its tolerance.
    #[error("numeric error: {what} (achieved error {achieved:.3e})")]
    Numeric { what: String, achieved: f64 },
    /// A path exceeded its event cap before the stop rule fired.
    #[error("event budget of {cap} exceeded")]
    Budget { cap: u64 },
    /// Inconsistent configuration of an estimator or spec.
    #[error("configuration error: {0}")]
    Config(String),
    /// A structural property of approximant paths was violated.
    #[error("structural violation: {0}")]
    Structural(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn model(msg: impl Into<String>) -> Error {
    Error::Model(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn numeric(msg: impl Into<String>, achieved: f64) -> Error {
    Error::Numeric {
        what: msg.into(),
        achieved,
    }
}
