//! JSON job files in, JSON check reports out.

pub mod config;
pub mod run;

pub use config::{ingest, parse_config, ConfigError, JobConfig, Payload, ScalarMode};
pub use run::{run, Command, JobReport, RunOptions};
