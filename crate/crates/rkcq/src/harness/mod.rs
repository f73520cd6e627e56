//! Run configuration, experiment drivers, convergence studies and CSV
//! reporting.

mod config;
mod selftest;
mod study;

pub use config::{
    Backend, BeamConfig, MeshConfig, RunConfig, RunOutput, SCHEMA_VERSION,
};
pub use selftest::{calderon_selftest, weights_selftest, SelftestReport};
pub use study::{convergence_study, fit_orders, ConvergenceReport, StudyMode, StudyRow};

pub use config::run;
