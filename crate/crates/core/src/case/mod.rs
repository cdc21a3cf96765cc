//! Case description, built-in presets and the build pipeline.

pub mod config;
pub mod presets;
pub mod run;
pub mod setup;

pub use config::{
    CaseConfig, DomainConfig, ExactSolution, Features, GeometryConfig, LagrangianConfig, OutputConfig, ProbeLine,
};
pub use presets::{preset, PRESET_NAMES};
pub use run::{
    compare_exact, convergence_study, run_case, validate_resolutions, version_stamp, CaseRun, ExactComparison,
    StudyOrder, StudyReport, StudyRow, RUN_LOG_HEADER,
};
pub use setup::{build_case, build_geometry, CaseSetup, Geometry};
