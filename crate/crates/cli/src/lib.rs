//! Library side of the `qce-dfrc` runner: TOML configuration, subcommand
//! drivers and file emitters.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::RunConfig;
pub use error::{CliError, Result};
