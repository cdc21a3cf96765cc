// Index loops mirror the stencil formulas; negated comparisons also reject NaN.
#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::type_complexity
)]

pub mod case;
pub mod error;
pub mod grid;
pub mod ibforce;
pub mod ipcs;
pub mod kernel;
pub mod linsolve;
pub mod post;
mod real;
pub mod surface;

pub use error::{Error, Result};
pub use real::{lit, Real};

/// Three-component vector used for points, normals and velocities.
pub type Vec3<T> = nalgebra::Vector3<T>;

/// Double-precision instantiations of the generic types.
pub type Grid = grid::EulerianGrid<f64>;
pub type Surface = surface::TriangleSurface<f64>;
pub type Cloud = surface::LagrangianCloud<f64>;
pub type Coupling = kernel::CouplingMatrix<f64>;
pub type Forces = ibforce::ForceSystem<f64>;
pub type Solver = ipcs::Stepper<f64>;
pub type Operators = post::DerivativeOperators<f64>;
pub type Setup = case::CaseSetup<f64>;
pub type Run = case::CaseRun<f64>;
