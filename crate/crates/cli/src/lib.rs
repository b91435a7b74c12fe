//! Dataset ingestion, synthetic fixtures and the benchmark harness behind the
//! `espresso` command-line tool.

pub mod bench;
pub mod config;
pub mod error;
pub mod ingest;
pub mod synth;

pub use error::CliError;
