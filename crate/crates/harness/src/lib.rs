//! Declarative experiment runner for on/off photon statistics.
//!
//! A TOML document (or a named preset) describes the state, efficiency
//! grid, shot counts, iterations and seed. [`run_experiment`] simulates the
//! on/off data, reconstructs it with the requested methods and returns a
//! [`RunReport`], which [`write_report`] stores as CSV tables or JSON.
//!
//! ```no_run
//! let cfg = onoff_harness::load_config("preset = \"fig1a\"\niterations = 10000")?;
//! let report = onoff_harness::run_experiment(&cfg)?;
//! println!("{:?}", report.final_fidelity());
//! # Ok::<(), onoff_harness::HarnessError>(())
//! ```

// `!(x > y)` range checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod presets;
pub mod report;
pub mod runner;

pub use config::{
    load_config, load_document, ConfigDocument, ExperimentConfig, GridConfig, Method, OutputFormat,
    ShotsMode, StateConfig, SweepAxis, SweepSpec,
};
pub use error::{HarnessError, Result};
pub use presets::Preset;
pub use report::{read_report, write_report, EmReport, InversionReport, RunReport};
pub use runner::{
    estimate_seconds, member_seed, run_experiment, run_experiment_with, run_sweep, run_sweep_with,
    sweep_members, RunOptions,
};
