//! Benchmark scenarios, diagnostics and the drivers behind the command line.

pub mod config;
pub mod diagnostics;
pub mod scenario;
pub mod study;
pub mod verify;

pub use config::{Resolved, ScenarioConfig, ScenarioKind};
pub use scenario::{run, RunOutput, Summary};
pub use study::{run_study, StudyConfig};
