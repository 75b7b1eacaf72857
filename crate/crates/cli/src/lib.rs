//! Command-line front-end for `truthlens`.
//!
//! Every command writes one JSON document carrying the tool name and version,
//! the command, its effective configuration and the results. Failures are a
//! JSON `{"error": {...}}` object on stderr with a nonzero exit status.

pub mod args;
pub mod commands;
pub mod output;

pub use args::Cli;
pub use commands::run;
pub use output::{CliError, CliResult};
