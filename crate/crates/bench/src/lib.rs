//! Experiment runner for low-degree channel tomography: figure presets,
//! TOML configs and CSV output.

pub mod config;
pub mod experiments;
pub mod output;
pub mod psd;
pub mod setup;

pub use config::{ExperimentConfig, ExperimentKind, FrameSpec};
pub use experiments::run_experiment;
