//! Config-driven batch runs on top of `nqs-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod setup;

pub use config::RunConfig;
pub use error::CliError;
