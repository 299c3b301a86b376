//! Experiment runners behind the `blockage` command: each turns a
//! [`config::ScenarioConfig`] into a CSV table (and, for some, a JSON summary).

pub mod commands;
pub mod config;
pub mod error;

pub use error::CliError;
