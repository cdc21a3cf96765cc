//! Wall shear stress from meshless velocity gradients at the wall points.

use nalgebra::Matrix3;
use rayon::prelude::*;

use super::dcpse::{build_dcpse_at, DerivativeOperators};
use crate::error::{Error, Result};
use crate::grid::EulerianGrid;
use crate::kernel::build_coupling_points;
use crate::{lit, Real, Vec3};

/// Per-point strain rate, traction and its tangential part.
#[derive(Debug, Clone)]
pub struct WssField<T: Real> {
    /// `ε = ½(∇u + ∇uᵀ)` in s⁻¹.
    pub strain: Vec<Matrix3<T>>,
    /// `t = 2μ ε n̂` in Pa.
    pub traction: Vec<Vec3<T>>,
    /// `t_s = t − (t·n̂) n̂` in Pa.
    pub tangential: Vec<Vec3<T>>,
    /// `|t_s|` in Pa.
    pub magnitude: Vec<T>,
}

/// Traction from the operators' velocity gradient at each centre. `u` holds
/// one velocity per point of the operators' point set and `normals` one
/// normal per centre.
pub fn wall_shear_stress<T: Real>(
    ops: &DerivativeOperators<T>,
    u: &[Vec3<T>],
    normals: &[Vec3<T>],
    mu: T,
) -> Result<WssField<T>> {
    if normals.len() != ops.len() {
        return Err(Error::Shape(format!(
            "{} normals for {} centres",
            normals.len(),
            ops.len()
        )));
    }
    let grad = ops.velocity_gradient(u);
    let two = lit::<T>(2.0);
    let half = lit::<T>(0.5);
    let per: Vec<(Matrix3<T>, Vec3<T>, Vec3<T>, T)> = grad
        .par_iter()
        .zip(normals.par_iter())
        .map(|(g, n)| {
            let e = (g + g.transpose()) * half;
            let n = n.normalize();
            let t = e * n * (two * mu);
            let ts = t - n * t.dot(&n);
            (e, t, ts, ts.norm())
        })
        .collect();
    let mut out = WssField {
        strain: Vec::with_capacity(per.len()),
        traction: Vec::with_capacity(per.len()),
        tangential: Vec::with_capacity(per.len()),
        magnitude: Vec::with_capacity(per.len()),
    };
    for (e, t, ts, m) in per {
        out.strain.push(e);
        out.traction.push(t);
        out.tangential.push(ts);
        out.magnitude.push(m);
    }
    Ok(out)
}

/// Offsets of the interior collar, in multiples of the spacing.
pub const COLLAR_OFFSETS: [f64; 2] = [1.0, 2.0];

/// Wall points followed by two collar layers displaced against the normals
/// (into the lumen for outward-facing normals of an internal-flow wall).
pub fn collar_points<T: Real>(points: &[Vec3<T>], normals: &[Vec3<T>], spacing: T) -> Vec<Vec3<T>> {
    let mut out = points.to_vec();
    for k in COLLAR_OFFSETS {
        out.extend(
            points
                .iter()
                .zip(normals)
                .map(|(p, n)| p - n.normalize() * (spacing * lit(k))),
        );
    }
    out
}

/// Summary of a WSS evaluation on a wall cloud.
#[derive(Debug, Clone)]
pub struct WallShear<T: Real> {
    pub field: WssField<T>,
    pub operators: DerivativeOperators<T>,
    /// Collar cloud and its interpolated velocities.
    pub samples: Vec<Vec3<T>>,
    pub velocities: Vec<Vec3<T>>,
}

/// WSS on the wall points from the grid velocity: kernel interpolation onto
/// the wall and collar, DC-PSE gradients at the wall points with length
/// scale `h`.
pub fn grid_wall_shear<T: Real>(
    grid: &EulerianGrid<T>,
    u: &[Vec3<T>],
    points: &[Vec3<T>],
    normals: &[Vec3<T>],
    mu: T,
    h: T,
) -> Result<WallShear<T>> {
    if points.len() != normals.len() {
        return Err(Error::Shape("one normal per wall point expected".into()));
    }
    let samples = collar_points(points, normals, h);
    let coupling = build_coupling_points(grid, &samples)?;
    let velocities = coupling.interpolate(u);
    let centers: Vec<usize> = (0..points.len()).collect();
    let operators = build_dcpse_at(&samples, &centers, h)?;
    let field = wall_shear_stress(&operators, &velocities, normals, mu)?;
    Ok(WallShear {
        field,
        operators,
        samples,
        velocities,
    })
}

#[cfg(test)]
mod tests {
    use super::super::dcpse::build_dcpse_at;
    use super::*;

    /// Three stacked layers of a jittered planar patch at y = 0, h, 2h.
    fn slab(h: f64) -> (Vec<Vec3<f64>>, Vec<usize>) {
        let mut pts = Vec::new();
        let mut s = 7u64;
        let mut rnd = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for l in 0..3 {
            for k in 0..12 {
                for i in 0..12 {
                    pts.push(Vec3::new(
                        (i as f64 + 0.2 * rnd()) * h,
                        l as f64 * h,
                        (k as f64 + 0.2 * rnd()) * h,
                    ));
                }
            }
        }
        let centers = (0..144)
            .filter(|&c| (3..9).contains(&(c % 12)) && (3..9).contains(&(c / 12)))
            .collect();
        (pts, centers)
    }

    #[test]
    fn rigid_translation_has_no_shear() {
        let (pts, centers) = slab(0.1);
        let ops = build_dcpse_at(&pts, &centers, 0.1).unwrap();
        let u = vec![Vec3::new(0.3, -0.2, 1.0); pts.len()];
        let w = wall_shear_stress(&ops, &u, &vec![Vec3::y(); centers.len()], 1e-3).unwrap();
        assert!(w.strain.iter().all(|e| e.norm() < 1e-10));
        assert!(w.magnitude.iter().all(|m| *m < 1e-12));
    }

    #[test]
    fn couette_shear_matches_mu_gamma() {
        let (pts, centers) = slab(0.1);
        let ops = build_dcpse_at(&pts, &centers, 0.1).unwrap();
        let (gamma, mu) = (250.0, 3.45e-3);
        let u: Vec<Vec3<f64>> = pts.iter().map(|p| Vec3::new(gamma * p[1], 0.0, 0.0)).collect();
        let w = wall_shear_stress(&ops, &u, &vec![Vec3::y(); centers.len()], mu).unwrap();
        for (m, t) in w.magnitude.iter().zip(&w.tangential) {
            assert!((m - mu * gamma).abs() < 1e-8 * mu * gamma);
            assert!(t[1].abs() < 1e-12);
        }
    }

    #[test]
    fn tangential_traction_is_orthogonal_and_strain_symmetric() {
        let (pts, centers) = slab(0.1);
        let ops = build_dcpse_at(&pts, &centers, 0.1).unwrap();
        let u: Vec<Vec3<f64>> = pts
            .iter()
            .map(|p| Vec3::new(p[1] * p[2] + p[0], p[0] * p[0] - p[2], 3.0 * p[1] + p[0] * p[2]))
            .collect();
        let n = Vec3::new(0.3, 1.0, -0.2);
        let w = wall_shear_stress(&ops, &u, &vec![n; centers.len()], 2e-3).unwrap();
        for ((e, t), ts) in w.strain.iter().zip(&w.traction).zip(&w.tangential) {
            assert!((e - e.transpose()).norm() < 1e-14);
            assert!(ts.dot(&n.normalize()).abs() <= 1e-10 * t.norm());
        }
    }

    #[test]
    fn collar_layers_step_against_the_normal() {
        let p = vec![Vec3::new(1.0, 0.0, 0.0)];
        let n = vec![Vec3::new(2.0, 0.0, 0.0)];
        let c = collar_points(&p, &n, 0.1);
        assert_eq!(c.len(), 3);
        assert!((c[1] - Vec3::new(0.9, 0.0, 0.0)).norm() < 1e-15);
        assert!((c[2] - Vec3::new(0.8, 0.0, 0.0)).norm() < 1e-15);
    }
}
