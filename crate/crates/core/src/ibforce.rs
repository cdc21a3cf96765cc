//! Boundary-condition-enforced force system: the dense M×M matrix linking
//! Lagrangian forces to the velocity they induce at the Lagrangian points.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::CouplingMatrix;
use crate::linsolve::{DenseFactor, DenseFactorKind};
use crate::{Real, Vec3};

/// Relative residual accepted for each component solve.
pub const FORCE_RESIDUAL_TOL: f64 = 1e-10;

/// `A_F[i,k] = (Δt/ρ) h³ ΔS_k Σ_j D_ij D_kj`, the sum running over the nodes
/// flagged in `correctable` (all nodes when `None`). Only nodes whose velocity
/// is unknown can be corrected, so prescribed-velocity nodes are excluded.
pub fn assemble_a<T: Real>(
    d: &CouplingMatrix<T>,
    areas: &[T],
    dt: T,
    rho: T,
    correctable: Option<&[bool]>,
) -> Result<DMatrix<T>> {
    let m = d.n_points();
    if m == 0 {
        return Err(Error::Config("force system needs at least one Lagrangian point".into()));
    }
    if areas.len() != m {
        return Err(Error::Shape(format!("{} areas for {m} points", areas.len())));
    }
    if let Some(c) = correctable {
        if c.len() != d.n_nodes() {
            return Err(Error::Shape(format!(
                "correctable mask of {} for {} nodes",
                c.len(),
                d.n_nodes()
            )));
        }
    }
    // column lists: for each node, the points touching it
    let mut touch: Vec<Vec<(usize, T)>> = vec![Vec::new(); d.n_nodes()];
    for i in 0..m {
        for (j, w) in d.row(i) {
            if correctable.is_none_or(|c| c[j]) {
                touch[j].push((i, w));
            }
        }
    }
    let mut a = DMatrix::<T>::zeros(m, m);
    for list in &touch {
        for &(i, wi) in list {
            for &(k, wk) in list {
                a[(i, k)] += wi * wk;
            }
        }
    }
    let h = d.h();
    let c = dt / rho * h * h * h;
    for k in 0..m {
        let s = c * areas[k];
        a.column_mut(k).iter_mut().for_each(|v| *v *= s);
    }
    Ok(a)
}

/// `B_F[i] = U_B,i − Σ_j u*_j D_ij h³`.
pub fn assemble_b<T: Real>(d: &CouplingMatrix<T>, u_star: &[Vec3<T>], ub: &[Vec3<T>]) -> Result<Vec<Vec3<T>>> {
    if ub.len() != d.n_points() {
        return Err(Error::Shape(format!(
            "{} boundary velocities for {} points",
            ub.len(),
            d.n_points()
        )));
    }
    if u_star.len() != d.n_nodes() {
        return Err(Error::Shape(format!(
            "velocity of length {} for {} nodes",
            u_star.len(),
            d.n_nodes()
        )));
    }
    Ok(d.interpolate(u_star).iter().zip(ub).map(|(ui, b)| b - ui).collect())
}

/// `u = u* + (Δt/ρ) f` on correctable nodes; other nodes keep `u*`.
pub fn correct_velocity<T: Real>(
    u_star: &[Vec3<T>],
    f: &[Vec3<T>],
    dt: T,
    rho: T,
    correctable: Option<&[bool]>,
) -> Vec<Vec3<T>> {
    let c = dt / rho;
    u_star
        .iter()
        .zip(f)
        .enumerate()
        .map(|(j, (u, fj))| {
            if correctable.is_none_or(|m| m[j]) {
                u + fj * c
            } else {
                *u
            }
        })
        .collect()
}

/// Factored force system, built once for a rigid boundary and reused every
/// step against new right-hand sides.
#[derive(Debug, Clone)]
pub struct ForceSystem<T: Real> {
    coupling: CouplingMatrix<T>,
    areas: Vec<T>,
    correctable: Option<Vec<bool>>,
    dt: T,
    rho: T,
    factor: DenseFactor<T>,
}

impl<T: Real> ForceSystem<T> {
    pub fn new(
        coupling: CouplingMatrix<T>,
        areas: Vec<T>,
        dt: T,
        rho: T,
        correctable: Option<Vec<bool>>,
        cap: usize,
    ) -> Result<Self> {
        let a = assemble_a(&coupling, &areas, dt, rho, correctable.as_deref())?;
        let factor = DenseFactor::new(a, cap).map_err(|e| match e {
            Error::Singular(msg) => Error::Singular(format!(
                "{msg}; the Lagrangian points are too dense for the grid, increase the surface spacing ds relative to h"
            )),
            other => other,
        })?;
        log::debug!(
            "force system: M = {}, {:?}, pivot ratio {:.3e}",
            factor.dim(),
            factor.kind(),
            factor.pivot_ratio()
        );
        Ok(Self {
            coupling,
            areas,
            correctable,
            dt,
            rho,
            factor,
        })
    }

    pub fn n_points(&self) -> usize {
        self.coupling.n_points()
    }

    pub fn coupling(&self) -> &CouplingMatrix<T> {
        &self.coupling
    }

    pub fn areas(&self) -> &[T] {
        &self.areas
    }

    pub fn correctable(&self) -> Option<&[bool]> {
        self.correctable.as_deref()
    }

    pub fn factor_kind(&self) -> DenseFactorKind {
        self.factor.kind()
    }

    /// Smallest over largest pivot of the factorization.
    pub fn pivot_ratio(&self) -> f64 {
        self.factor.pivot_ratio()
    }

    /// `A_F F` evaluated through the coupling operator without the dense matrix.
    pub fn apply(&self, forces: &[Vec3<T>]) -> Vec<Vec3<T>> {
        let f = self.coupling.spread(forces, &self.areas);
        let u = correct_velocity(
            &vec![Vec3::zeros(); f.len()],
            &f,
            self.dt,
            self.rho,
            self.correctable.as_deref(),
        );
        self.coupling.interpolate(&u)
    }

    /// Solves `A_F F = B_F` for each component and verifies the residual.
    pub fn solve(&self, b: &[Vec3<T>]) -> Result<Vec<Vec3<T>>> {
        let m = self.n_points();
        if b.len() != m {
            return Err(Error::Shape(format!("{} right-hand sides for {m} points", b.len())));
        }
        let rhs = DMatrix::from_fn(m, 3, |i, c| b[i][c]);
        let x = self.factor.solve_matrix(&rhs);
        let forces: Vec<Vec3<T>> = (0..m).map(|i| Vec3::new(x[(i, 0)], x[(i, 1)], x[(i, 2)])).collect();
        let back = self.apply(&forces);
        for c in 0..3 {
            let bn = b.iter().fold(0.0f64, |s, v| s.max(v[c].as_f64().abs()));
            let rn = back
                .iter()
                .zip(b)
                .fold(0.0f64, |s, (u, v)| s.max((u[c] - v[c]).as_f64().abs()));
            let tol = FORCE_RESIDUAL_TOL.max(1e3 * T::EPS.as_f64());
            if rn > tol * bn {
                return Err(Error::Singular(format!(
                    "force system residual {:.3e} exceeds {:.1e} relative in component {c}; \
                     the system is ill-conditioned, increase the surface spacing ds relative to h",
                    rn / bn,
                    tol
                )));
            }
        }
        Ok(forces)
    }

    /// Full correction: solve for the forces that make the interpolated
    /// velocity equal `ub`, spread them, and correct `u_star`.
    /// Returns the corrected field, the body force and the Lagrangian forces.
    pub fn enforce(&self, u_star: &[Vec3<T>], ub: &[Vec3<T>]) -> Result<Correction<T>> {
        let b = assemble_b(&self.coupling, u_star, ub)?;
        let forces = self.solve(&b)?;
        let body = self.coupling.spread(&forces, &self.areas);
        let velocity = correct_velocity(u_star, &body, self.dt, self.rho, self.correctable.as_deref());
        Ok(Correction { velocity, body, forces })
    }

    /// `max_i |interpolate(u)_i − U_B,i|`.
    pub fn enforcement_residual(&self, u: &[Vec3<T>], ub: &[Vec3<T>]) -> T {
        self.coupling
            .interpolate(u)
            .iter()
            .zip(ub)
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
    }
}

#[derive(Debug, Clone)]
pub struct Correction<T: Real> {
    pub velocity: Vec<Vec3<T>>,
    pub body: Vec<Vec3<T>>,
    pub forces: Vec<Vec3<T>>,
}
