//! Command-line front end: job configuration, artefact emission, and the
//! amplitude-damping demo.

pub mod config;
pub mod demo;
pub mod emit;
pub mod error;
pub mod run;

pub use config::{parse_config, Cli, JobConfig};
pub use error::CliError;
