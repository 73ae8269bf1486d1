//! Mean-field cavity-QED simulation of non-destructive molecule detection.
//!
//! An ensemble of `N_c` identical effective molecules couples to one mode of a
//! Fabry-Perot cavity. The crate integrates the mean-field Maxwell-Bloch
//! equations for two level schemes:
//!
//! * a 3-level system (`|g>`, `|e>`, dark `|g'>`) probed through the cavity,
//!   which shows vacuum Rabi splitting (VRS);
//! * a leaky 4-level lambda system (`|g>`, `|e>`, `|g'>`, dark `|g''>`) with an
//!   additional control field, which shows cavity EIT and slowed ring-down.
//!
//! Every simulated observable has a closed-form counterpart in [`analytics`]
//! (splitting `2 g0 sqrt(N_c)`, the linear susceptibility, the EIT linewidth)
//! so runs can be cross-checked against theory. The [`io`] module turns a
//! TOML configuration into runs on disk, and `examples/` shows each capability
//! end to end.
//!
//! Internally every frequency and rate is angular (rad/s). Configuration files
//! use ordinary hertz and are converted exactly once in [`model::validate`].

pub mod analytics;
pub mod cli;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod model;
pub mod physparams;

pub use error::{Error, Result};
pub use model::{Config, Model};
