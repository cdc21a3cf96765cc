//! Meshless first-derivative operators on scattered points, exact on
//! polynomials up to second degree.
//!
//! At a centre `x_i` with neighbours `x_j` and scaled offsets
//! `z_j = (x_j − x_i)/ε`, the derivative is `Σ_j a_j (f_j − f_i)` with
//! `a_j = w_j p(z_j)ᵀ c`, `w_j = exp(−|z_j|²)` and `p` the nine monomials of
//! degree 1 and 2. The moment matrix `M = Σ w_j p pᵀ` and `M c = ∂p(0)` make
//! every such monomial reproduce exactly.

use nalgebra::{SMatrix, SVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::surface::HashGrid;
use crate::{lit, Real, Vec3};

/// Size of the degree-2 monomial basis without the constant.
pub const N_MONOMIALS: usize = 9;
/// Neighbour count required: basis size plus the constant, times a safety
/// factor of 2.
pub const MIN_NEIGHBORS: usize = 2 * (N_MONOMIALS + 1);
/// Initial cutoff radius in units of `h_local`.
pub const CUTOFF_FACTOR: f64 = 3.5;
/// Smallest accepted eigenvalue ratio of the moment matrix.
const CONDITION_FLOOR: f64 = 1e-12;
/// Cutoff growth per retry, and the largest cutoff tried.
const GROWTH: f64 = 1.25;
const MAX_CUTOFF_FACTOR: f64 = 20.0;

fn monomials<T: Real>(z: &Vec3<T>) -> SVector<T, N_MONOMIALS> {
    SVector::from([
        z[0],
        z[1],
        z[2],
        z[0] * z[0],
        z[0] * z[1],
        z[0] * z[2],
        z[1] * z[1],
        z[1] * z[2],
        z[2] * z[2],
    ])
}

/// Per-centre neighbour lists and gradient weights.
#[derive(Debug, Clone)]
pub struct DerivativeOperators<T: Real> {
    /// Index of each centre in the point set.
    centers: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
    /// `weights[i][d][k]`: weight of neighbour `k` in `∂/∂x_d` at centre `i`.
    weights: Vec<[Vec<T>; 3]>,
    cutoff: Vec<T>,
    h_local: T,
}

/// Operators at every point of `points`.
pub fn build_dcpse<T: Real>(points: &[Vec3<T>], h_local: T) -> Result<DerivativeOperators<T>> {
    let centers: Vec<usize> = (0..points.len()).collect();
    build_dcpse_at(points, &centers, h_local)
}

/// Operators at the listed centres, with neighbours drawn from all of
/// `points`.
pub fn build_dcpse_at<T: Real>(points: &[Vec3<T>], centers: &[usize], h_local: T) -> Result<DerivativeOperators<T>> {
    if !(h_local > T::zero()) {
        return Err(Error::Config(format!(
            "DC-PSE length scale must be positive, got {h_local}"
        )));
    }
    if let Some(&c) = centers.iter().find(|&&c| c >= points.len()) {
        return Err(Error::Shape(format!(
            "centre {c} outside a set of {} points",
            points.len()
        )));
    }
    let cell = h_local * lit(CUTOFF_FACTOR);
    let grid = HashGrid::new(points, cell);
    let built: Vec<Result<(Vec<usize>, [Vec<T>; 3], T)>> = centers
        .par_iter()
        .map(|&i| point_operator(points, &grid, cell, i, h_local))
        .collect();
    let mut neighbors = Vec::with_capacity(centers.len());
    let mut weights = Vec::with_capacity(centers.len());
    let mut cutoff = Vec::with_capacity(centers.len());
    for b in built {
        let (n, w, c) = b?;
        neighbors.push(n);
        weights.push(w);
        cutoff.push(c);
    }
    Ok(DerivativeOperators {
        centers: centers.to_vec(),
        neighbors,
        weights,
        cutoff,
        h_local,
    })
}

fn point_operator<T: Real>(
    points: &[Vec3<T>],
    grid: &HashGrid<T>,
    cell: T,
    i: usize,
    eps: T,
) -> Result<(Vec<usize>, [Vec<T>; 3], T)> {
    let xi = points[i];
    let mut radius = eps * lit(CUTOFF_FACTOR);
    let limit = eps * lit(MAX_CUTOFF_FACTOR);
    let mut last_problem = String::new();
    while radius <= limit * lit(1.0 + 1e-12) {
        let reach = (radius / cell).ceil().to_i64().unwrap_or(1).max(1);
        let mut nb = Vec::new();
        grid.for_near(&xi, reach, |j| {
            if j != i && (points[j] - xi).norm() <= radius {
                nb.push(j);
            }
        });
        nb.sort_unstable();
        if nb.len() < MIN_NEIGHBORS {
            last_problem = format!("{} neighbours within {}", nb.len(), radius);
            radius *= lit(GROWTH);
            continue;
        }
        let z: Vec<Vec3<T>> = nb.iter().map(|&j| (points[j] - xi) / eps).collect();
        let w: Vec<T> = z.iter().map(|v| (-v.norm_squared()).exp()).collect();
        let p: Vec<SVector<T, N_MONOMIALS>> = z.iter().map(monomials).collect();
        let mut m = SMatrix::<T, N_MONOMIALS, N_MONOMIALS>::zeros();
        for (pk, &wk) in p.iter().zip(&w) {
            m += pk * pk.transpose() * wk;
        }
        let eig = SymmetricEigen::new(m);
        let (lo, hi) = eig
            .eigenvalues
            .iter()
            .fold((T::max_value().unwrap(), T::zero()), |(lo, hi), &v| {
                (lo.min(v), hi.max(v.abs()))
            });
        if !(hi > T::zero()) || lo <= hi * lit(CONDITION_FLOOR) {
            last_problem = format!(
                "moment matrix rank deficient (eigenvalue ratio {:.1e})",
                (lo / hi).as_f64()
            );
            radius *= lit(GROWTH);
            continue;
        }
        let mut out: [Vec<T>; 3] = Default::default();
        for d in 0..3 {
            let mut rhs = SVector::<T, N_MONOMIALS>::zeros();
            rhs[d] = T::one() / eps;
            // M is symmetric positive definite here
            let c = eig.eigenvectors
                * eig
                    .eigenvalues
                    .map(|v| T::one() / v)
                    .component_mul(&(eig.eigenvectors.transpose() * rhs));
            out[d] = p.iter().zip(&w).map(|(pk, &wk)| wk * pk.dot(&c)).collect();
        }
        return Ok((nb, out, radius));
    }
    Err(Error::Singular(format!(
        "DC-PSE neighbourhood of point {i} at ({}, {}, {}) is degenerate: {last_problem}",
        xi[0], xi[1], xi[2]
    )))
}

impl<T: Real> DerivativeOperators<T> {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn cutoff(&self, i: usize) -> T {
        self.cutoff[i]
    }

    pub fn h_local(&self) -> T {
        self.h_local
    }

    /// Gradient of the scalar samples `f` (one per point) at each centre.
    pub fn gradient(&self, f: &[T]) -> Vec<Vec3<T>> {
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let fi = f[self.centers[i]];
                let mut g = Vec3::zeros();
                for d in 0..3 {
                    g[d] = self.neighbors[i]
                        .iter()
                        .zip(&self.weights[i][d])
                        .fold(T::zero(), |s, (&j, &w)| s + w * (f[j] - fi));
                }
                g
            })
            .collect()
    }

    /// Velocity gradient `G[a][b] = ∂u_a/∂x_b` at each centre.
    pub fn velocity_gradient(&self, u: &[Vec3<T>]) -> Vec<nalgebra::Matrix3<T>> {
        let mut out = vec![nalgebra::Matrix3::zeros(); self.len()];
        for a in 0..3 {
            let comp: Vec<T> = u.iter().map(|v| v[a]).collect();
            for (m, g) in out.iter_mut().zip(self.gradient(&comp)) {
                for b in 0..3 {
                    m[(a, b)] = g[b];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Shell of jittered lattice points: three layers, irregular in-plane.
    fn cloud(h: f64) -> Vec<Vec3<f64>> {
        let mut s = 0x9e3779b97f4a7c15u64;
        let mut rnd = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut pts = Vec::new();
        for k in 0..3 {
            for j in 0..14 {
                for i in 0..14 {
                    pts.push(Vec3::new(
                        (i as f64 + 0.3 * rnd()) * h,
                        (j as f64 + 0.3 * rnd()) * h,
                        (k as f64 + 0.3 * rnd()) * h,
                    ));
                }
            }
        }
        pts
    }

    fn check_monomials(pts: &[Vec3<f64>], ops: &DerivativeOperators<f64>) {
        // all monomials x^a y^b z^c with a+b+c ≤ 2, including the constant
        for a in 0..=2 {
            for b in 0..=(2 - a) {
                for c in 0..=(2 - a - b) {
                    let f: Vec<f64> = pts.iter().map(|p| p[0].powi(a) * p[1].powi(b) * p[2].powi(c)).collect();
                    let g = ops.gradient(&f);
                    for (k, &ci) in ops.centers().iter().enumerate() {
                        let p = pts[ci];
                        let pw = |v: f64, e: i32| if e <= 0 { 0.0 } else { e as f64 * v.powi(e - 1) };
                        let exact = Vec3::new(
                            pw(p[0], a) * p[1].powi(b) * p[2].powi(c),
                            p[0].powi(a) * pw(p[1], b) * p[2].powi(c),
                            p[0].powi(a) * p[1].powi(b) * pw(p[2], c),
                        );
                        let scale = exact.norm().max(1.0);
                        assert!(
                            (g[k] - exact).norm() <= 1e-8 * scale,
                            "x^{a} y^{b} z^{c} at {p:?}: {:?} vs {exact:?}",
                            g[k]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn linear_and_product_fields_are_exact() {
        let pts = cloud(0.1);
        let ops = build_dcpse(&pts, 0.1).unwrap();
        let f: Vec<f64> = pts.iter().map(|p| p[0]).collect();
        assert!(ops
            .gradient(&f)
            .iter()
            .all(|g| (g[0] - 1.0).abs() < 1e-8 && g[1].abs() < 1e-8));
        let f: Vec<f64> = pts.iter().map(|p| p[0] * p[1]).collect();
        for (g, p) in ops.gradient(&f).iter().zip(&pts) {
            assert!((g[0] - p[1]).abs() < 1e-8 * p[1].abs().max(1.0));
        }
    }

    #[test]
    fn every_quadratic_monomial_is_reproduced() {
        let pts = cloud(0.05);
        let ops = build_dcpse(&pts, 0.05).unwrap();
        assert!(ops.neighbors(0).len() >= MIN_NEIGHBORS);
        check_monomials(&pts, &ops);
    }

    #[test]
    fn sine_derivative_converges_at_second_order() {
        let err = |h: f64| {
            let pts = cloud(h);
            let ops = build_dcpse(&pts, h).unwrap();
            let f: Vec<f64> = pts.iter().map(|p| p[0].sin()).collect();
            let g = ops.gradient(&f);
            // interior of the patch, away from the one-sided edges
            let mid = Vec3::new(6.5 * h, 6.5 * h, h);
            g.iter()
                .zip(&pts)
                .filter(|(_, p)| (*p - mid).abs().max() < 2.5 * h)
                .map(|(g, p)| (g[0] - p[0].cos()).abs())
                .fold(0.0f64, f64::max)
        };
        // same point layout scaled: errors over the same relative region
        let (e1, e2) = (err(0.02), err(0.01));
        let order = (e1 / e2).log2();
        assert!(order >= 2.0 - 0.05, "order {order} ({e1:e} -> {e2:e})");
    }

    #[test]
    fn coplanar_points_are_degenerate_and_name_the_point() {
        // z, z², xz and yz vanish on a plane, so the moment matrix is singular
        let pts: Vec<Vec3<f64>> = cloud(0.1)
            .into_iter()
            .filter(|p| p[2] < 0.05)
            .map(|p| Vec3::new(p[0], p[1], 0.0))
            .collect();
        let err = build_dcpse(&pts, 0.1).unwrap_err();
        match err {
            Error::Singular(m) => assert!(m.contains("point 0"), "{m}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn too_few_points_is_an_error() {
        let pts: Vec<Vec3<f64>> = (0..10).map(|i| Vec3::new(i as f64, (i * i) as f64, 0.0)).collect();
        assert!(build_dcpse(&pts, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn random_quadratics_are_exact(c in proptest::collection::vec(-3.0f64..3.0, 10)) {
            let pts = cloud(0.1);
            let ops = build_dcpse_at(&pts, &[200, 250, 300], 0.1).unwrap();
            let q = |p: &Vec3<f64>| c[0] + c[1]*p[0] + c[2]*p[1] + c[3]*p[2] + c[4]*p[0]*p[0]
                + c[5]*p[0]*p[1] + c[6]*p[0]*p[2] + c[7]*p[1]*p[1] + c[8]*p[1]*p[2] + c[9]*p[2]*p[2];
            let f: Vec<f64> = pts.iter().map(q).collect();
            let g = ops.gradient(&f);
            for (k, &i) in ops.centers().iter().enumerate() {
                let p = pts[i];
                let ex = Vec3::new(
                    c[1] + 2.0*c[4]*p[0] + c[5]*p[1] + c[6]*p[2],
                    c[2] + c[5]*p[0] + 2.0*c[7]*p[1] + c[8]*p[2],
                    c[3] + c[6]*p[0] + c[8]*p[1] + 2.0*c[9]*p[2],
                );
                prop_assert!((g[k] - ex).norm() <= 1e-8 * ex.norm().max(1.0));
            }
        }
    }
}
