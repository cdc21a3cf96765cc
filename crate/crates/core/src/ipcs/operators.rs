//! Vertex-centred finite-volume divergence and gradient on the active lattice,
//! and the pressure-increment operator built from them.
//!
//! Every active node owns a box-shaped control volume of edge `h`, halved
//! along an axis when the node lies on a box face. The divergence of a cell is
//! the net flux through its faces, with face velocities averaged from the two
//! adjacent nodes and taken from the node itself on faces without a
//! neighbour. Pressure rows are the interior and prescribed-velocity nodes;
//! pressure nodes carry data. The gradient is the negative adjoint of the
//! divergence scaled by the cell volume, so the projection is exact in the
//! discrete sense.

use rayon::prelude::*;

use super::bc::{Classification, NodeClass};
use crate::error::{Error, Result};
use crate::grid::EulerianGrid;
use crate::linsolve::SparseOperator;
use crate::{lit, Real, Vec3};

#[derive(Debug, Clone)]
pub struct FvOperators<T: Real> {
    h: T,
    class: Vec<NodeClass>,
    /// `nb[a][axis][side]`, side 0 = minus, 1 = plus.
    nb: Vec<[[Option<usize>; 2]; 3]>,
    /// Control-volume edge lengths per axis.
    ext: Vec<[T; 3]>,
    /// Active node of each pressure row.
    rows: Vec<usize>,
    row_of: Vec<Option<usize>>,
}

impl<T: Real> FvOperators<T> {
    pub fn new(grid: &EulerianGrid<T>, cls: &Classification) -> Result<Self> {
        let n = grid.n_active();
        if cls.class.len() != n {
            return Err(Error::Shape(format!("{} classes for {n} nodes", cls.class.len())));
        }
        let h = grid.h();
        let half = h * lit(0.5);
        let dims = grid.dims();
        let mut nb = Vec::with_capacity(n);
        let mut ext = Vec::with_capacity(n);
        for a in 0..n {
            let ijk = grid.active_ijk(a);
            let mut e = [h; 3];
            let mut row = [[None; 2]; 3];
            for ax in 0..3 {
                if ijk[ax] == 0 || ijk[ax] + 1 == dims[ax] {
                    e[ax] = half;
                }
                row[ax] = [grid.neighbor(a, ax, -1), grid.neighbor(a, ax, 1)];
            }
            nb.push(row);
            ext.push(e);
        }
        let mut rows = Vec::new();
        let mut row_of = vec![None; n];
        for a in 0..n {
            if !matches!(cls.class[a], NodeClass::Pressure { .. }) {
                row_of[a] = Some(rows.len());
                rows.push(a);
            }
        }
        Ok(Self {
            h,
            class: cls.class.clone(),
            nb,
            ext,
            rows,
            row_of,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.class.len()
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Active node of each pressure row.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn row_of(&self, a: usize) -> Option<usize> {
        self.row_of[a]
    }

    pub fn class(&self, a: usize) -> NodeClass {
        self.class[a]
    }

    pub fn neighbor(&self, a: usize, axis: usize, side: usize) -> Option<usize> {
        self.nb[a][axis][side]
    }

    /// Velocity is solved for (interior and pressure nodes).
    pub fn is_unknown(&self, a: usize) -> bool {
        !matches!(self.class[a], NodeClass::Velocity)
    }

    pub fn volume(&self, a: usize) -> T {
        let e = self.ext[a];
        e[0] * e[1] * e[2]
    }

    fn face_area(&self, a: usize, axis: usize) -> T {
        let e = self.ext[a];
        match axis {
            0 => e[1] * e[2],
            1 => e[0] * e[2],
            _ => e[0] * e[1],
        }
    }

    /// Net outward flux of each pressure row's cell.
    pub fn divergence_flux(&self, u: &[Vec3<T>]) -> Vec<T> {
        assert_eq!(u.len(), self.n_nodes(), "divergence field length");
        let half = lit::<T>(0.5);
        self.rows
            .par_iter()
            .map(|&r| {
                let mut s = T::zero();
                for ax in 0..3 {
                    let area = self.face_area(r, ax);
                    for (side, sign) in [(0usize, -T::one()), (1, T::one())] {
                        let flux = match self.nb[r][ax][side] {
                            Some(n) => (u[r][ax] + u[n][ax]) * half,
                            None => u[r][ax],
                        };
                        s += sign * area * flux;
                    }
                }
                s
            })
            .collect()
    }

    /// Divergence per unit volume at each pressure row.
    pub fn divergence(&self, u: &[Vec3<T>]) -> Vec<T> {
        let mut d = self.divergence_flux(u);
        for (k, &r) in self.rows.iter().enumerate() {
            d[k] /= self.volume(r);
        }
        d
    }

    /// Discrete gradient at unknown-velocity nodes from a pressure given on
    /// every active node (rows and pressure nodes); zero at prescribed nodes.
    pub fn gradient(&self, p: &[T]) -> Vec<Vec3<T>> {
        assert_eq!(p.len(), self.n_nodes(), "gradient field length");
        let half = lit::<T>(0.5);
        (0..self.n_nodes())
            .into_par_iter()
            .map(|a| {
                if !self.is_unknown(a) {
                    return Vec3::zeros();
                }
                let m = self.volume(a);
                let mut g = Vec3::zeros();
                for ax in 0..3 {
                    let c = self.face_area(a, ax) * half / m;
                    let lo = self.nb[a][ax][0].map_or(T::zero(), |n| p[n]);
                    let hi = self.nb[a][ax][1].map_or(T::zero(), |n| p[n]);
                    g[ax] = c * (hi - lo);
                    if let NodeClass::Pressure { axis, inward } = self.class[a] {
                        if axis as usize == ax {
                            // one-sided: the face on the box side is excluded
                            g[ax] -= c * T::from_i8(inward).unwrap() * p[a];
                        }
                    }
                }
                g
            })
            .collect()
    }

    /// Pressure-row vector scattered onto all nodes (zero at pressure nodes).
    pub fn rows_to_nodes(&self, phi: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_nodes()];
        for (k, &r) in self.rows.iter().enumerate() {
            out[r] = phi[k];
        }
        out
    }

    /// `S = D_U M⁻¹ D_Uᵀ` on pressure rows, with `D_U` the divergence
    /// restricted to unknown velocities. Symmetric positive semidefinite; it
    /// couples rows two cells apart and so splits into parity classes.
    pub fn poisson_matrix(&self) -> Result<SparseOperator<T>> {
        let half = lit::<T>(0.5);
        let mut trip = Vec::with_capacity(self.n_rows() * 13);
        for a in 0..self.n_nodes() {
            if !self.is_unknown(a) {
                continue;
            }
            let m = self.volume(a);
            for ax in 0..3 {
                let c = self.face_area(a, ax) * half;
                // coefficient of u_{a,ax} in the row on each side
                let mut ent: [(usize, T); 2] = [(usize::MAX, T::zero()); 2];
                let mut k = 0;
                for (side, sign) in [(0usize, T::one()), (1, -T::one())] {
                    if let Some(r) = self.nb[a][ax][side].and_then(|n| self.row_of[n]) {
                        ent[k] = (r, sign * c);
                        k += 1;
                    }
                }
                for &(r1, c1) in &ent[..k] {
                    for &(r2, c2) in &ent[..k] {
                        trip.push((r1, r2, c1 * c2 / m));
                    }
                }
            }
        }
        SparseOperator::from_triplets(self.n_rows(), self.n_rows(), trip, true)
    }
}
