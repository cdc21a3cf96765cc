//! Incremental pressure-correction time stepping with the immersed-boundary
//! velocity correction between the momentum and pressure steps.

pub mod bc;
pub mod momentum;
pub mod monitor;
pub mod operators;
pub mod poisson;
mod step;

pub use bc::{
    boundary_pressure, boundary_velocity, classify, BoundaryConditionSet, Classification, Face, NodeClass, Patch,
    PatchKind, Region, TimeSeries, VelocityProfile,
};
pub use momentum::{assemble_momentum, Advection, MomentumSystem, UnknownIndex};
pub use monitor::{steady_monitor, MonitorKind};
pub use operators::FvOperators;
pub use poisson::{PoissonMethod, PoissonSolver};
pub use step::{FluidProperties, ImmersedBoundary, RunSummary, SolverOptions, StepRecord, Stepper, TimeControls};
