//! Experiment driver for the comb-channel capacity bounds: structured JSON
//! configs, bundled figure presets, an SNR-sweep runner that dispatches
//! bound/AIR computations to a worker pool, and machine-readable outputs
//! (a results CSV, per-curve CSVs, and a JSON run manifest).

pub mod config;
pub mod presets;
pub mod runner;

pub use config::{
    ChannelSpec, CurveKind, ExperimentConfig, McSettings, OptimSettings, TrellisSettings,
};
pub use runner::{run_experiment, ExperimentOutput, ResultRow};
