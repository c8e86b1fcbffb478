//! Presets, time-stepping driver and CSV output for the BGK solvers in
//! `bgk-core`.
//!
//! ```no_run
//! use bgk_experiments::config::{parse_config, RunConfig};
//!
//! let overrides = parse_config("preset=plane1d-small\ntend=2\nout=runs/demo").unwrap();
//! let config = RunConfig::resolve(&overrides, None).unwrap();
//! let summary = bgk_experiments::run_experiment(&config).unwrap();
//! println!("{} steps, max rank {}", summary.steps, summary.max_rank());
//! ```

pub mod config;
pub mod driver;
mod error;
pub mod io;
pub mod setup;

pub use config::{parse_config, Overrides, Preset, RunConfig, Scheme};
pub use driver::{run_experiment, threads_from_env, RunSummary, SolverState};
pub use error::{ExperimentError, Result};
pub use io::{parse_diagnostics, parse_snapshot, Snapshot};
