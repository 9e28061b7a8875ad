//! Configuration parsing and command dispatch for the `vertexset` binary.

pub mod commands;
pub mod config;

pub use commands::{run, CliError, ErrorRecord, Report};
pub use config::{parse_config, Command, ConfigError, FamilySpec, RunConfig};
