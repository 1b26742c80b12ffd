//! File formats, parallel execution and the `pnn` command-line tool built on
//! [`pnn_core`].

pub mod checkpoint;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod parallel;

pub use error::{CliError, Result};
