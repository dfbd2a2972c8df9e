//! Deterministic experiment harness: JSON configs in, CSV/SVG/JSON out.

pub mod config;
pub mod experiments;
pub mod output;
pub mod svg;

pub use config::{Arm, Experiment, ExperimentConfig};
pub use experiments::{run, RunOutcome};
pub use output::RunManifest;
