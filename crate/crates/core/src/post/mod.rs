//! Reference solutions, error norms, meshless surface derivatives, wall shear
//! stress and field export.

pub mod dcpse;
pub mod exact;
pub mod norms;
pub mod probes;
pub mod vtk;
pub mod wss;

pub use dcpse::{build_dcpse, build_dcpse_at, DerivativeOperators};
pub use exact::{poiseuille_exact, PoiseuilleTube};
pub use norms::{error_norms, error_norms_scalar, observed_order, ErrorReport};
pub use probes::{probe_csv, sample_line, trilinear, write_probe_csv, ProbeSample, PROBE_HEADER};
pub use vtk::{grid_fields, PointData, PolyData, StructuredPoints};
pub use wss::{collar_points, grid_wall_shear, wall_shear_stress, WallShear, WssField};
