//! Reproducible experiments: TOML configs in, CSV, SVG and JSON manifests out.

pub mod config;
pub mod csv_io;
pub mod manifest;
pub mod reports;
pub mod scenario;
pub mod svg;
pub mod sweep;

pub use config::{AnalysisSpec, ExperimentConfig, InitSpec, ModeSpec, OutputKind, ResolvedExperiment};
pub use manifest::RunManifest;
pub use scenario::{run_config, run_experiment, run_scenario, scenario_config, RunOptions, RunOutcome, SCENARIOS};
pub use sweep::{sweep_time_constant, SweepRow, SweepTable};
