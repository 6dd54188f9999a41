//! Simulation scenarios, file formats and the experiment runner built on
//! `klt-mbi-core`.

pub mod config;
pub mod error;
pub mod export;
pub mod parallel;
pub mod pgm;
pub mod pipeline;
pub mod scenarios;
pub mod trace;

pub use config::{validate_file, RunConfig};
pub use error::{RunError, RunResult};
pub use pipeline::{execute, run, RunSummary};
