//! Batch runner: a sectioned config describes a family, a base and one
//! experiment; the runner dispatches to `henon-skew-core` and writes rasters,
//! CSV tables and raw grids, followed by a `manifest.json` with checksums.

pub mod config;
pub mod error;
pub mod experiments;
pub mod expr;
pub mod formats;
pub mod manifest;

pub use config::{ExperimentConfig, ExperimentKind, Overrides};
pub use error::CliError;
pub use experiments::Outputs;
pub use manifest::{run, RunManifest, RunResult};
