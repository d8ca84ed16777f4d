//! Configuration, experiment drivers and reports for the `fbe` binary.

pub mod config;
pub mod ensemble;
pub mod experiments;
pub mod report;

pub use config::{Experiment, RunConfig};
pub use experiments::run_experiment;
pub use report::Report;
