//! Data generators and Monte Carlo studies for FIR / Laguerre systems.

pub mod catalog;
pub mod study;
pub mod system;

pub use catalog::{run_experiment, CatalogRun, Overrides, EXPERIMENTS};
pub use study::{
    area_study, coverage_study, Aggregates, ExperimentReport, Proportion, StudyConfig, StudyKind, TrialRecord,
};
pub use system::{simulate_dataset, NoiseModel, RegressorBasis, SystemSpec};
