//! Std companion to `facetopo-core`: file formats, a thread-pool executor,
//! run configuration and the `facetopo` command-line tool.

pub mod cli;
pub mod config;
mod error;
pub mod formats;
pub mod parallel;
pub mod run;

pub use error::{Error, Result};
