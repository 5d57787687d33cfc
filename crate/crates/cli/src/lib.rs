//! Config-driven experiment pipelines on top of the `jointspace` library.

pub mod commands;
pub mod config;
pub mod error;
pub mod inputs;
pub mod manifest;
pub mod pipeline;

pub use commands::{cmd_align, cmd_baseline, cmd_evaluate, cmd_featurize, cmd_pca, cmd_sweep, cmd_synth, SweepOutcome};
pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
