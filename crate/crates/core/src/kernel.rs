//! Four-point discrete delta kernel and the Eulerian–Lagrangian coupling
//! operator built from it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::EulerianGrid;
use crate::surface::LagrangianCloud;
use crate::{lit, Real, Vec3};

/// One-dimensional kernel δ(r), supported on |r| < 2.
pub fn delta_1d<T: Real>(r: T) -> T {
    let a = r.abs();
    let (one, two) = (T::one(), lit::<T>(2.0));
    let eighth = lit::<T>(0.125);
    if a <= one {
        (lit::<T>(3.0) - two * a + (one + lit::<T>(4.0) * a - lit::<T>(4.0) * a * a).sqrt()) * eighth
    } else if a <= two {
        let disc = lit::<T>(-7.0) + lit::<T>(12.0) * a - lit::<T>(4.0) * a * a;
        (lit::<T>(5.0) - two * a - disc.max(T::zero()).sqrt()) * eighth
    } else {
        T::zero()
    }
}

/// Tensor-product kernel `Π (1/h) δ((x_c − X_c)/h)`, units of 1/volume.
pub fn kernel_3d<T: Real>(x: &Vec3<T>, xl: &Vec3<T>, h: T) -> T {
    (0..3).fold(T::one(), |acc, c| acc * delta_1d((x[c] - xl[c]) / h) / h)
}

/// Sparse M×N matrix of kernel weights `D_ij` between Lagrangian point `i`
/// and active node `j`. Each row holds at most 64 entries.
#[derive(Debug, Clone)]
pub struct CouplingMatrix<T: Real> {
    n_nodes: usize,
    h: T,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> CouplingMatrix<T> {
    pub fn n_points(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn h(&self) -> T {
        self.h
    }

    /// `(node, D_ij)` pairs of row `i`, ordered by node index.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    /// `U_i = Σ_j u_j D_ij h³`.
    pub fn interpolate(&self, u: &[Vec3<T>]) -> Vec<Vec3<T>> {
        assert_eq!(u.len(), self.n_nodes, "interpolate field length");
        let h3 = self.h * self.h * self.h;
        (0..self.n_points())
            .map(|i| self.row(i).fold(Vec3::zeros(), |acc, (j, d)| acc + u[j] * d) * h3)
            .collect()
    }

    pub fn interpolate_scalar(&self, q: &[T]) -> Vec<T> {
        assert_eq!(q.len(), self.n_nodes, "interpolate field length");
        let h3 = self.h * self.h * self.h;
        (0..self.n_points())
            .map(|i| self.row(i).fold(T::zero(), |acc, (j, d)| acc + q[j] * d) * h3)
            .collect()
    }

    /// `f_j = Σ_i F_i D_ij ΔS_i`, accumulated point by point in index order.
    pub fn spread(&self, forces: &[Vec3<T>], areas: &[T]) -> Vec<Vec3<T>> {
        assert_eq!(forces.len(), self.n_points(), "spread force count");
        assert_eq!(areas.len(), self.n_points(), "spread area count");
        let mut f = vec![Vec3::zeros(); self.n_nodes];
        for i in 0..self.n_points() {
            let w = forces[i] * areas[i];
            for (j, d) in self.row(i) {
                f[j] += w * d;
            }
        }
        f
    }
}

/// Kernel weights of every cloud point against the active nodes of `grid`.
///
/// Fails with [`Error::IncompleteSupport`] when a node inside a point's
/// support (|r| < 2 along every axis) is outside the box or inactive.
pub fn build_coupling<T: Real>(grid: &EulerianGrid<T>, cloud: &LagrangianCloud<T>) -> Result<CouplingMatrix<T>> {
    build_coupling_points(grid, &cloud.points)
}

/// [`build_coupling`] for bare points.
pub fn build_coupling_points<T: Real>(grid: &EulerianGrid<T>, points: &[Vec3<T>]) -> Result<CouplingMatrix<T>> {
    let h = grid.h();
    let min = grid.domain().min;
    let two = lit::<T>(2.0);
    let rows: Vec<Result<Vec<(usize, T)>>> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            if !(0..3).all(|c| p[c].is_finite()) {
                return Err(Error::IncompleteSupport {
                    point: i,
                    reason: "non-finite coordinates".into(),
                });
            }
            let mut base = [0isize; 3];
            let mut w = [[T::zero(); 4]; 3];
            let mut inside = [[false; 4]; 3];
            for c in 0..3 {
                let s = (p[c] - min[c]) / h;
                base[c] = s.floor().to_isize().unwrap_or(isize::MIN / 2) - 1;
                for o in 0..4 {
                    let r = s - T::from_isize(base[c] + o as isize).unwrap();
                    inside[c][o] = r.abs() < two;
                    w[c][o] = delta_1d(r) / h;
                }
            }
            let mut row = Vec::with_capacity(64);
            for oz in 0..4 {
                for oy in 0..4 {
                    for ox in 0..4 {
                        if !(inside[0][ox] && inside[1][oy] && inside[2][oz]) {
                            continue;
                        }
                        let ijk = [base[0] + ox as isize, base[1] + oy as isize, base[2] + oz as isize];
                        let node = grid.active_at(ijk).ok_or_else(|| Error::IncompleteSupport {
                            point: i,
                            reason: format!(
                                "lattice node {:?} near ({}, {}, {}) is {}",
                                ijk,
                                p[0],
                                p[1],
                                p[2],
                                if (0..3).all(|c| ijk[c] >= 0 && (ijk[c] as usize) < grid.dims()[c]) {
                                    "inactive"
                                } else {
                                    "outside the box"
                                }
                            ),
                        })?;
                        let d = w[0][ox] * w[1][oy] * w[2][oz];
                        if d != T::zero() {
                            row.push((node, d));
                        }
                    }
                }
            }
            row.sort_by_key(|&(j, _)| j);
            Ok(row)
        })
        .collect();
    let mut row_ptr = vec![0usize];
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    for r in rows {
        for (j, d) in r? {
            cols.push(j);
            vals.push(d);
        }
        row_ptr.push(cols.len());
    }
    Ok(CouplingMatrix {
        n_nodes: grid.n_active(),
        h,
        row_ptr,
        cols,
        vals,
    })
}
