//! Command-line tooling around [`eoratio_core`]: cohort CSV ingestion, model
//! and grid configuration files, report serialization and a parallel
//! simulation runner.

pub mod cli;
pub mod cohort_file;
pub mod config;
mod error;
pub mod report;
pub mod runner;

pub use error::{Error, Result, RowError};
