//! File formats, dataset layout and the `fogbench` command line.

pub mod cli;
pub mod commands;
pub mod dataset;
pub mod error;
pub mod pfm;
pub mod png;
pub mod render;

pub use cli::Cli;
pub use commands::run;
pub use error::{CliError, Result};
