//! Batch runner for the kernel and star-product verification pipelines:
//! configuration, the invariant suite, the three commands and their reports.

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use error::CliError;
