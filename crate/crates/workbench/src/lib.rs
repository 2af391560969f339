//! Command line workbench and rating-session service for qoe-forge corpora.

pub mod commands;
pub mod config;
pub mod encoder;
pub mod error;
pub mod manifest;
pub mod seed;
pub mod server;

pub use error::{CliError, CliResult};
