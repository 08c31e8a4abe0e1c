//! Configuration and dispatch for the `fracspde` binary.

pub mod commands;
pub mod config;

pub use commands::{execute, parse_config, run, Cli, Job, RunConfig, RunError};
pub use config::{ConfigError, ParamBag};
