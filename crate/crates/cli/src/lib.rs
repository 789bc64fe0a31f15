//! Batch runner for the gpargmax experiments: TOML configs in, CSV tables
//! and a `summary.json` verdict out.

pub mod catalog;
pub mod config;
pub mod experiments;
pub mod report;
pub mod run;

pub use config::RunConfig;
pub use report::{Status, Summary};
