//! Command-line front end: configuration, file formats and the
//! `simulate`, `fit`, `irf` and `summarize` commands.

pub mod atomic;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

pub use config::RunConfig;
pub use error::{CliError, Result};
