//! Experiment harness: configuration, built-in problems, reference
//! solutions, replicated runs, and report emission.

pub mod config;
pub mod examples;
pub mod experiment;
pub mod reference;
pub mod report;
pub mod verify;

pub use config::{load_config, ExperimentConfig, ProblemSource, ScheduleConfig, StartConfig};
pub use examples::{builtin_config, builtin_examples, example1, example2};
pub use experiment::{cross_oracle_gate, run_experiment, verify_report, RunReport};
pub use reference::{compute_or_load, compute_reference, Reference};
pub use report::emit_report;
