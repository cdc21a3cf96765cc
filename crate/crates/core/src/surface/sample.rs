use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{closest_point_on_triangle, TriangleSurface};
use crate::error::{Error, Result};
use crate::{lit, Real, Vec3};

/// Default RNG seed for surface resampling.
pub const DEFAULT_SEED: u64 = 0x5EED_1B0F;

/// Surface points carrying quadrature area, outward normal and prescribed velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianCloud<T: Real> {
    pub points: Vec<Vec3<T>>,
    pub normals: Vec<Vec3<T>>,
    /// Area ΔS assigned to each point.
    pub areas: Vec<T>,
    /// Prescribed boundary velocity U_B.
    pub velocities: Vec<Vec3<T>>,
}

impl<T: Real> LagrangianCloud<T> {
    /// Points sharing `total_area` equally, at rest.
    pub fn uniform(points: Vec<Vec3<T>>, normals: Vec<Vec3<T>>, total_area: T) -> Self {
        let m = points.len();
        let ds = total_area / T::from_usize_lossy(m.max(1));
        Self {
            points,
            normals,
            areas: vec![ds; m],
            velocities: vec![Vec3::zeros(); m],
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_area(&self) -> T {
        self.areas.iter().fold(T::zero(), |a, &b| a + b)
    }

    /// Mean assigned area.
    pub fn mean_area(&self) -> T {
        self.total_area() / T::from_usize_lossy(self.len())
    }

    /// Mean distance from each point to its nearest neighbour.
    pub fn mean_nearest_spacing(&self) -> T {
        let r = self.mean_area().sqrt() * lit(2.0);
        let grid = HashGrid::new(&self.points, r);
        let mut total = T::zero();
        for (i, p) in self.points.iter().enumerate() {
            let mut best = T::max_value().unwrap();
            let mut reach = 1i64;
            loop {
                grid.for_near(p, reach, |j| {
                    if j != i {
                        best = best.min((self.points[j] - p).norm());
                    }
                });
                if best <= r * T::from_usize_lossy(reach as usize) || reach > 8 {
                    break;
                }
                reach += 1;
            }
            total += best;
        }
        total / T::from_usize_lossy(self.len())
    }
}

pub(crate) struct HashGrid<T: Real> {
    cell: T,
    map: HashMap<[i64; 3], Vec<usize>>,
}

impl<T: Real> HashGrid<T> {
    pub(crate) fn new(points: &[Vec3<T>], cell: T) -> Self {
        let mut g = Self {
            cell,
            map: HashMap::new(),
        };
        for (i, p) in points.iter().enumerate() {
            g.insert(p, i);
        }
        g
    }

    fn key(&self, p: &Vec3<T>) -> [i64; 3] {
        let q = |v: T| (v / self.cell).floor().to_i64().unwrap_or(0);
        [q(p[0]), q(p[1]), q(p[2])]
    }

    fn insert(&mut self, p: &Vec3<T>, i: usize) {
        let k = self.key(p);
        self.map.entry(k).or_default().push(i);
    }

    pub(crate) fn for_near(&self, p: &Vec3<T>, reach: i64, mut f: impl FnMut(usize)) {
        let k = self.key(p);
        for dz in -reach..=reach {
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    if let Some(list) = self.map.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        list.iter().for_each(|&j| f(j));
                    }
                }
            }
        }
    }
}

/// Exclusion radius of the dart throwing relative to the target spacing; a
/// maximal sample at this radius has mean nearest-neighbour spacing close to
/// the target.
const RADIUS_FACTOR: f64 = 0.83;
/// Candidate pool size per expected accepted point.
const CANDIDATES_PER_POINT: f64 = 24.0;

/// Quasi-uniform resampling of `surface` at spacing `target_ds`.
///
/// Dart throwing over an area-weighted candidate pool, then one discrete
/// Lloyd pass (each point moves to the centroid of the candidates closest to
/// it, projected back onto the surface). Every point receives the same area
/// `A_total / M`. Identical inputs and seed give bit-identical output.
pub fn resample_uniform<T: Real>(surface: &TriangleSurface<T>, target_ds: T, seed: u64) -> Result<LagrangianCloud<T>> {
    if !(target_ds > T::zero()) {
        return Err(Error::Config(format!(
            "target spacing must be positive, got {target_ds}"
        )));
    }
    let diag = surface.bbox_diagonal();
    if target_ds >= diag {
        return Err(Error::Config(format!(
            "target spacing {target_ds} is not smaller than the surface bounding-box diagonal {diag}"
        )));
    }
    let area = surface.total_area();
    let r = target_ds * lit(RADIUS_FACTOR);
    let n_cand = ((area / (r * r)).as_f64() * CANDIDATES_PER_POINT).ceil() as usize;
    let n_cand = n_cand.max(64);

    let mut cdf = Vec::with_capacity(surface.n_facets());
    let mut acc = 0.0f64;
    for &a in surface.areas() {
        acc += a.as_f64();
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates: Vec<(Vec3<T>, usize)> = (0..n_cand)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            let f = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
            let (s, t): (f64, f64) = (rng.random(), rng.random());
            let sq = s.sqrt();
            let (b0, b1, b2) = (1.0 - sq, sq * (1.0 - t), sq * t);
            let [a, b, c] = surface.triangle(f);
            (a * lit::<T>(b0) + b * lit::<T>(b1) + c * lit::<T>(b2), f)
        })
        .collect();

    let mut accepted: Vec<usize> = Vec::new();
    let mut grid = HashGrid {
        cell: r,
        map: HashMap::new(),
    };
    for (ci, (p, _)) in candidates.iter().enumerate() {
        let mut free = true;
        grid.for_near(p, 1, |j| {
            if free && (candidates[accepted[j]].0 - p).norm() < r {
                free = false;
            }
        });
        if free {
            grid.insert(p, accepted.len());
            accepted.push(ci);
        }
    }
    let m = accepted.len();
    if m < 4 {
        return Err(Error::Config(format!(
            "target spacing {target_ds} leaves only {m} surface points (need at least 4)"
        )));
    }

    // discrete Lloyd pass
    let mut sum = vec![Vec3::<T>::zeros(); m];
    let mut count = vec![0usize; m];
    let mut facets: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (p, f) in &candidates {
        let mut best = (T::max_value().unwrap(), usize::MAX);
        grid.for_near(p, 1, |j| {
            let d = (candidates[accepted[j]].0 - p).norm_squared();
            if d < best.0 || (d == best.0 && j < best.1) {
                best = (d, j);
            }
        });
        let j = best.1;
        sum[j] += p;
        count[j] += 1;
        if !facets[j].contains(f) {
            facets[j].push(*f);
        }
    }
    let mut points = Vec::with_capacity(m);
    let mut normals = Vec::with_capacity(m);
    for j in 0..m {
        let centroid = sum[j] / T::from_usize_lossy(count[j]);
        let mut best = (T::max_value().unwrap(), Vec3::zeros(), 0usize);
        for &f in &facets[j] {
            let [a, b, c] = surface.triangle(f);
            let q = closest_point_on_triangle(&centroid, &a, &b, &c);
            let d = (q - centroid).norm_squared();
            if d < best.0 {
                best = (d, q, f);
            }
        }
        points.push(best.1);
        normals.push(surface.normals()[best.2]);
    }
    Ok(LagrangianCloud::uniform(points, normals, area))
}

#[cfg(test)]
mod tests {
    use super::super::shapes::icosphere;
    use super::*;

    #[test]
    fn sphere_point_count_and_area_budget() {
        let s = icosphere::<f64>(Vec3::zeros(), 1.0, 5);
        let c = resample_uniform(&s, 0.1, DEFAULT_SEED).unwrap();
        let expected = 4.0 * std::f64::consts::PI / 0.01;
        let m = c.len() as f64;
        assert!((m - expected).abs() / expected < 0.25, "M = {m}, expected {expected}");
        assert!((c.total_area() - s.total_area()).abs() <= 1e-12 * s.total_area());
        let nn = c.mean_nearest_spacing();
        assert!((nn - 0.1).abs() < 0.02, "mean spacing {nn}");
        // every point lies on the surface (unit sphere up to facet chord error)
        let tol = 1e-6 * s.bbox_diagonal();
        for p in &c.points {
            let d = (0..s.n_facets())
                .map(|i| {
                    let [a, b, cc] = s.triangle(i);
                    (closest_point_on_triangle(p, &a, &b, &cc) - p).norm()
                })
                .fold(f64::MAX, f64::min);
            assert!(d <= tol);
        }
    }

    #[test]
    fn resampling_is_deterministic() {
        let s = icosphere::<f64>(Vec3::zeros(), 1.0, 3);
        let a = resample_uniform(&s, 0.2, 7).unwrap();
        let b = resample_uniform(&s, 0.2, 7).unwrap();
        assert_eq!(a, b);
        let c = resample_uniform(&s, 0.2, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn too_coarse_spacing_is_rejected() {
        let s = icosphere::<f64>(Vec3::zeros(), 1.0, 2);
        assert!(resample_uniform(&s, s.bbox_diagonal(), 1).is_err());
        assert!(resample_uniform(&s, 3.0, 1).is_err());
    }
}
