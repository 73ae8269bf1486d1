//! Configuration loading, run directories and the command implementations
//! behind the `cavity-detect` binary.
//!
//! A run directory `<root>/<run id>/` holds `manifest.json` (the resolved
//! configuration), the data table (`scan.csv` or `ringdown.csv`) and
//! `summary.json`. Feeding a manifest back as the config reproduces the data
//! and summary byte for byte.

pub mod commands;
pub mod config;
pub mod output;
pub mod sweep;

pub use commands::{
    cmd_eit_scan, cmd_ringdown, cmd_validate, cmd_vrs_scan, execute, Command, RunOptions, RunOutput,
    Summary,
};
pub use config::{apply_overrides, load_config, parse_override, resolve};
pub use output::{read_csv, RunManifest};
pub use sweep::{cmd_sweep, run_sweep, SweepReport, SweepSpec};
