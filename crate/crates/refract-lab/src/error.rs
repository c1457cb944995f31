use thiserror::Error;

use crate::config::ConfigError;

/// Exit status for each failure class.
pub mod exit_code {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const NUMERIC: i32 = 3;
    pub const BUDGET: i32 = 4;
}

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] refract_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    /// An artifact's recorded config hash does not match the expected one.
    #[error("artifact {path} was produced by config {found}, expected {expected}")]
    HashMismatch { path: String, found: String, expected: String },
    #[error("malformed artifact {path}: {reason}")]
    Artifact { path: String, reason: String },
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        use refract_core::Error as E;
        match self {
            LabError::Config(_) => exit_code::VALIDATION,
            LabError::Core(E::Domain(_) | E::Model(_) | E::Config(_)) => exit_code::VALIDATION,
            LabError::Core(E::Numeric { .. }) => exit_code::NUMERIC,
            LabError::Core(E::Budget { .. }) => exit_code::BUDGET,
            _ => exit_code::OTHER,
        }
    }
}

pub type LabResult<T> = Result<T, LabError>;
