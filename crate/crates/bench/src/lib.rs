//! Experiment harness for warm-standby allocation: configuration loading,
//! reproduction of the worked examples, allocation ranking, hypothesis
//! probing and curve output.

pub mod checks;
pub mod config;
pub mod curve;
pub mod error;
pub mod probe;
pub mod rank;
pub mod report;
pub mod reproduce;
pub mod selftest;
pub mod theory;

pub use config::ExperimentConfig;
pub use error::{BenchError, Outcome, Result};
pub use report::ReproReport;
pub use reproduce::{run_reproduction, ExampleId};
