//! Reproducible experiment harness over `adiabatic-core`.
//!
//! Each run reads one versioned TOML config, writes its CSV/JSON artifacts
//! into one directory and finishes with a `manifest.json` that carries the
//! config echo, seeds, versions, wall time and a SHA-256 per file.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;

pub use config::{ExperimentConfig, ExperimentKind, FinalKind, Modifier};
pub use error::{CliError, ErrorRecord, Result};
pub use experiments::{compare, run};
pub use manifest::{ContentKind, Manifest};
