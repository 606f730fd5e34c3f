//! Scenario files, the closed-loop episode runner and metric tables.

pub mod library;
pub mod metrics;
pub mod runner;
pub mod spec;

pub use metrics::{emit_metrics, worst_case_histogram, MetricsFormat, WorstCaseHistogram};
pub use runner::{run_episode, EpisodeLog, LagrangeConfig, RunConfig, RunMode, StepRecord};
pub use spec::{load_scenario, parse_scenario, Scenario, ScenarioSpec};
