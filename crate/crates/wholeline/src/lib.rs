//! Experiment harness for the `wholeline-core` solver: configuration files,
//! runs with error observers, CSV/JSON outputs, convergence studies and
//! parameter sweeps.

pub mod config;
pub mod error;
pub mod experiment;
pub mod report;
pub mod study;

pub use config::{presets, ExperimentConfig};
pub use error::{ConfigError, HarnessError};
pub use experiment::{run, ErrorReport, RunOutput, Sample, Setup};
pub use study::{convergence_study, parameter_sweep, scalar_self_test, sigma_sweep};
