//! Sparse iterative and dense direct linear solvers.
//!
//! Momentum systems are nonsymmetric and go through [`bicgstab_solve`]; the
//! pressure-increment system is symmetric positive (semi)definite and is
//! solved with Jacobi-preconditioned [`cg_solve`] or, when the same operator
//! is reused for many steps, with the envelope Cholesky in [`EnvelopeCholesky`].
//! The immersed-boundary force system is dense and factored once through
//! [`DenseFactor`].

mod dense;
mod envelope;
mod krylov;
mod sparse;

pub use dense::{dense_factor_solve, dense_relative_residual, DenseFactor, DenseFactorKind, DEFAULT_DENSE_CAP};
pub use envelope::{reverse_cuthill_mckee, EnvelopeCholesky};
pub use krylov::{bicgstab_solve, cg_solve, KrylovOptions};
pub use sparse::SparseOperator;

use std::fmt;

/// Outcome of an iterative solve. The residual is always recomputed from the
/// returned iterate, never taken from the recurrence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// ‖b − A x‖₂ / ‖b‖₂ (or ‖b − A x‖₂ when b = 0).
    pub relative_residual: f64,
    pub converged: bool,
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} iterations, relative residual {:.3e}{}",
            self.iterations,
            self.relative_residual,
            if self.converged { "" } else { " (not converged)" }
        )
    }
}

pub(crate) fn dot<T: crate::Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn norm2<T: crate::Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
