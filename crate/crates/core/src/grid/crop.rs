use super::EulerianGrid;
use crate::error::{Error, Result};
use crate::surface::{closest_point_on_triangle, ScanlineInside, TriangleSurface};
use crate::{lit, Real, Vec3};

/// Node counts before and after cropping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropReport {
    pub active_before: usize,
    pub active_after: usize,
    /// Active nodes inside the solid (identical before and after).
    pub inside: usize,
}

impl CropReport {
    pub fn inside_fraction_before(&self) -> f64 {
        self.inside as f64 / self.active_before as f64
    }

    pub fn inside_fraction_after(&self) -> f64 {
        self.inside as f64 / self.active_after as f64
    }
}

/// Keeps the active nodes that lie inside `solid` or within Euclidean
/// distance `band` of its surface. `band ≥ 2h` is required; whether every
/// kernel support is covered is checked when the coupling is built.
pub fn crop_active_region<T: Real>(
    grid: &EulerianGrid<T>,
    solid: &TriangleSurface<T>,
    band: T,
) -> Result<(EulerianGrid<T>, CropReport)> {
    let h = grid.h();
    if band < lit::<T>(2.0) * h * (T::one() - lit(1e-9)) {
        return Err(Error::Config(format!(
            "crop band {band} is smaller than 2h = {}; kernel support would be truncated",
            lit::<T>(2.0) * h
        )));
    }
    if !solid.is_closed() {
        return Err(Error::Surface("cropping requires a closed solid surface".into()));
    }
    let dims = grid.dims();
    let origin = grid.domain().min;
    let mut near = vec![false; grid.n_total()];
    let half = band * (T::one() + lit(1e-12));
    let to_idx = |v: T, axis: usize, up: bool| -> usize {
        let x = ((v - origin[axis]) / h).as_f64();
        let k = if up { x.floor() } else { x.ceil() };
        k.clamp(0.0, (dims[axis] - 1) as f64) as usize
    };
    for f in 0..solid.n_facets() {
        let tri = solid.triangle(f);
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        let mut empty = false;
        for a in 0..3 {
            let tmin = tri[0][a].min(tri[1][a]).min(tri[2][a]) - half;
            let tmax = tri[0][a].max(tri[1][a]).max(tri[2][a]) + half;
            if tmax < origin[a] || tmin > grid.domain().max[a] {
                empty = true;
            }
            lo[a] = to_idx(tmin, a, false);
            hi[a] = to_idx(tmax, a, true);
        }
        if empty {
            continue;
        }
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    let g = grid.global_index([i, j, k]);
                    if near[g] {
                        continue;
                    }
                    let x = grid.coord_ijk([i, j, k]);
                    if (x - closest_point_on_triangle(&x, &tri[0], &tri[1], &tri[2])).norm() <= half {
                        near[g] = true;
                    }
                }
            }
        }
    }
    let scan = ScanlineInside::new(solid, origin, h, dims);
    let mut mask = vec![false; grid.n_total()];
    let mut inside = 0usize;
    for a in 0..grid.n_active() {
        let g = grid.active_to_global(a);
        let ijk = grid.ijk(g);
        let is_in = scan.inside(ijk);
        if is_in {
            inside += 1;
        }
        mask[g] = is_in || near[g];
    }
    let cropped = grid.with_mask(mask)?;
    let report = CropReport {
        active_before: grid.n_active(),
        active_after: cropped.n_active(),
        inside,
    };
    log::info!(
        "cropped grid: {} -> {} active nodes, inside fraction {:.3} -> {:.3}",
        report.active_before,
        report.active_after,
        report.inside_fraction_before(),
        report.inside_fraction_after()
    );
    Ok((cropped, report))
}

/// Reactivates every in-box lattice node within the kernel support
/// (|r| < 2h along each axis) of a point, so curved walls whose support
/// corners reach past the band stay fully coupled. Returns the new grid and
/// the number of nodes added.
pub fn cover_kernel_supports<T: Real>(grid: &EulerianGrid<T>, points: &[Vec3<T>]) -> Result<(EulerianGrid<T>, usize)> {
    let h = grid.h();
    let min = grid.domain().min;
    let dims = grid.dims();
    let mut mask = grid.active_mask().to_vec();
    let mut added = 0usize;
    for p in points {
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for c in 0..3 {
            let s = ((p[c] - min[c]) / h).as_f64();
            lo[c] = ((s - 2.0).floor().max(0.0) as usize).min(dims[c] - 1);
            hi[c] = ((s + 2.0).ceil().max(0.0) as usize).min(dims[c] - 1);
        }
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    let ijk = [i, j, k];
                    let inside = (0..3).all(|c| {
                        let r = ((p[c] - min[c]) / h).as_f64() - ijk[c] as f64;
                        r.abs() < 2.0
                    });
                    let g = grid.global_index(ijk);
                    if inside && !mask[g] {
                        mask[g] = true;
                        added += 1;
                    }
                }
            }
        }
    }
    if added == 0 {
        return Ok((grid.clone(), 0));
    }
    Ok((grid.with_mask(mask)?, added))
}

#[cfg(test)]
mod tests {
    use super::super::BoxDomain;
    use super::*;
    use crate::surface::shapes::{icosphere, unit_cube_triangles};
    use crate::surface::winding_number;

    fn segment_distance(p: &Vec3<f64>, a: &Vec3<f64>, b: &Vec3<f64>) -> f64 {
        let ab = b - a;
        let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
        (p - (a + ab * t)).norm()
    }

    /// Distance to a triangle: plane distance when the projection falls
    /// inside (same-side tests), else the nearest edge.
    fn triangle_distance(tri: &[Vec3<f64>; 3], p: &Vec3<f64>) -> f64 {
        let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).normalize();
        let d = (p - tri[0]).dot(&n);
        let q = p - n * d;
        let inside = (0..3).all(|i| {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            (b - a).cross(&(q - a)).dot(&n) >= 0.0
        });
        if inside {
            d.abs()
        } else {
            (0..3)
                .map(|i| segment_distance(p, &tri[i], &tri[(i + 1) % 3]))
                .fold(f64::MAX, f64::min)
        }
    }

    fn unit_grid(h: f64) -> EulerianGrid<f64> {
        EulerianGrid::build(BoxDomain::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)).unwrap(), h).unwrap()
    }

    #[test]
    fn sphere_crop_matches_brute_force_scan() {
        let g = unit_grid(0.025);
        // centre nudged off the lattice so no node sits exactly at the band
        let centre = Vec3::new(0.5 + 1.3e-3 * 2f64.sqrt(), 0.5 + 0.7e-3 * 3f64.sqrt(), 0.5 - 1.1e-3);
        let s = icosphere::<f64>(centre, 0.25, 3);
        let band = 0.05;
        let (c, report) = crop_active_region(&g, &s, band).unwrap();
        let mut expected = 0;
        let mut ties = 0;
        for gi in 0..g.n_total() {
            let x = g.coord_ijk(g.ijk(gi));
            let inside = winding_number(&s, &x) > 0.5;
            let dist = (0..s.n_facets())
                .map(|f| triangle_distance(&s.triangle(f), &x))
                .fold(f64::MAX, f64::min);
            let near_lo = dist <= band * (1.0 - 1e-9);
            let near_hi = dist <= band * (1.0 + 1e-9);
            let kept = c.global_to_active(gi).is_some();
            if inside || near_lo == near_hi {
                assert_eq!(kept, inside || near_lo, "node {x:?}");
            } else {
                ties += 1;
            }
            expected += kept as usize;
        }
        assert_eq!(report.active_after, expected);
        assert!(ties <= 2, "{ties} nodes at exactly the band distance");
        assert!(report.inside_fraction_after() > report.inside_fraction_before());
    }

    #[test]
    fn whole_box_solid_keeps_everything() {
        let g = unit_grid(0.1);
        let s = TriangleSurface::from_triangles(&unit_cube_triangles()).unwrap();
        let (c, _) = crop_active_region(&g, &s, 0.2).unwrap();
        assert_eq!(c.n_active(), g.n_active());
    }

    #[test]
    fn narrow_band_is_rejected() {
        let g = unit_grid(0.1);
        let s = icosphere::<f64>(Vec3::new(0.5, 0.5, 0.5), 0.25, 1);
        let err = crop_active_region(&g, &s, 0.15).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn wider_band_keeps_superset() {
        let g = unit_grid(0.05);
        let s = icosphere::<f64>(Vec3::new(0.5, 0.5, 0.5), 0.25, 2);
        let mut prev: Option<EulerianGrid<f64>> = None;
        for k in 2..6 {
            let (c, _) = crop_active_region(&g, &s, 0.05 * k as f64).unwrap();
            if let Some(p) = &prev {
                for a in 0..p.n_active() {
                    assert!(c.global_to_active(p.active_to_global(a)).is_some());
                }
            }
            prev = Some(c);
        }
    }

    #[test]
    fn support_closure_activates_exactly_the_kernel_box() {
        let dom = BoxDomain::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)).unwrap();
        let full = EulerianGrid::build(dom, 0.1).unwrap();
        let empty = full.with_mask(vec![false; full.n_total()]).unwrap();
        let p = Vec3::new(0.43, 0.52, 0.55);
        let (g, added) = cover_kernel_supports(&empty, &[p]).unwrap();
        // |r| < 2 holds for four nodes along each axis
        assert_eq!(added, 4 * 4 * 4);
        assert_eq!(g.n_active(), added);
        assert!(crate::kernel::build_coupling_points(&g, &[p]).is_ok());
        let (again, more) = cover_kernel_supports(&g, &[p]).unwrap();
        assert_eq!((more, again.n_active()), (0, added));
    }
}
