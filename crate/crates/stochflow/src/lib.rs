//! Experiment driver for `stochflow-core`: configuration, the flow model as
//! a stochastic map, cached KL bases and velocity libraries, method runs,
//! error metrics, file formats and the CLI.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod flow;
pub mod io;
pub mod library;
pub mod metrics;
pub mod output;

pub use config::{ExperimentConfig, MethodKind};
pub use experiment::{precompute_global_library, run_experiment, Experiment, QoIStats};
pub use metrics::{relative_errors, ErrorReport, ErrorSplit};
