//! Persistence and command implementations behind the `csisense` binary.
//!
//! Trace files, dataset manifests, run configs and reports live here; the
//! numerical work is all in `csisense-core`.

pub mod cache;
pub mod commands;
pub mod config;
mod error;
pub mod fsutil;
pub mod image_out;
pub mod manifest;
pub mod report;
pub mod trace_file;

pub use error::CliError;
