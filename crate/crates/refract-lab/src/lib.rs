//! Configs, file formats and the command runner behind the `refract` binary.
//!
//! Artifacts are CSV (tabular) and JSON (records). Each carries the hash of
//! the config that produced it, and each run writes a `manifest.json` listing
//! its files with their SHA-256 digests.

// `!(a < b)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod io;

pub use commands::{config_hash, run_command, verify_manifest, Manifest, RunSummary};
pub use config::{parse_config, Command, ConfigError, DualityMode, Overrides, RunConfig};
pub use error::{exit_code, LabError, LabResult};
pub use exec::Threaded;
