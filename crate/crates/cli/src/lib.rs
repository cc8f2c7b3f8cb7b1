//! Command-line front end: benchmark runs, bound validation, pinned figure
//! reruns and SVG plots.

pub mod args;
pub mod commands;
pub mod error;
pub mod external;
pub mod plot;
pub mod reproduce;

pub use args::Cli;
pub use commands::execute;
pub use error::{CliError, CliResult};
