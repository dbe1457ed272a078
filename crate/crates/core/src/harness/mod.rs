//! Simulation harness.

pub mod admissibility;
pub mod config;
pub mod env;
pub mod episode;
pub mod suite;

pub use admissibility::{admissibility_check, AdmissibilityOptions, AdmissibilityReport, RelaxationKind};
pub use config::{Algorithm, ExperimentConfig};
pub use env::{AdaptiveRule, AdversaryView, ArgmaxPunish, CostProcess, Environment};
pub use episode::{expected_regret, realized_regret, run_episode, Benchmark, Transcript};
pub use suite::{run_suite, write_suite, EpisodeOutcome, Experiment, SuiteResult, SuiteSummary};
