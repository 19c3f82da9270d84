//! Experiment harness around `mcflab-core`: configuration files, orchestration of the flow,
//! soliton, rescaling and monitor pipelines, and deterministic CSV/JSON output with a
//! checksummed run manifest.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{ExperimentConfig, InitialDataSpec, Overrides};
pub use error::{CliError, CliResult};
pub use output::{Check, CheckStatus, RunManifest, Summary};
pub use run::{run, Command, RunOutcome};
