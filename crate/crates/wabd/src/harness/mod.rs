//! Experiment harness: configuration, the simulation driver, and the
//! checkers that validate runs (linearizability of the operation history and
//! whole-trace protocol invariants).

pub mod config;
pub mod invariants;
pub mod lin;
pub mod metrics;
pub mod runner;

pub use config::{ExperimentConfig, ExperimentConfigError, Mode};
pub use invariants::{
    check_protocol_invariants, InvariantKind, InvariantReport, InvariantViolation,
};
pub use lin::{check_linearizability, HistoryEvent, LinViolation, LinearizabilityResult};
pub use metrics::{InstallRow, MetricsReport, OpRow, Summary};
pub use runner::{run_experiment, RunOutput};
