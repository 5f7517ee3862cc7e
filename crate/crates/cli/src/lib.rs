//! Command-line surface for `gaptopk`: transaction ingestion, single runs,
//! the benchmark harness and the verification entry point.
//!
//! Query indices in every output are **1-based**.

pub mod bench;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod run;
pub mod synth;

pub use cli::{main_with, Cli};
pub use error::{CliError, Result};
