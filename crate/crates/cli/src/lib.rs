//! Command-line pipeline: corpus generation, model training, clustering,
//! channel simulation and statistics.

pub mod cli;
pub mod commands;
pub mod csvio;
pub mod error;
pub mod manifest;

pub use cli::Cli;
pub use commands::run;
pub use error::{CliError, CliResult, Failure};
