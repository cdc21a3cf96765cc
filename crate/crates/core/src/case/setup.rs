//! Case assembly: grid, cropping, resampling, coupling and the stepper.

use super::config::{CaseConfig, GeometryConfig};
use crate::error::{Error, Result};
use crate::grid::{cover_kernel_supports, crop_active_region, BoxDomain, CropReport, EulerianGrid};
use crate::ipcs::Stepper;
use crate::kernel::build_coupling;
use crate::surface::shapes::{swept_tube, u_bend_centerline, Centerline, Segment, TubeMesh};
use crate::surface::{load_surface, resample_uniform, LagrangianCloud, TriangleSurface};
use crate::{lit, Real, Vec3};

/// Generated tubes run this many cells past the box so the solid's caps stay
/// clear of every node.
pub const CAP_OVERHANG_CELLS: f64 = 2.5;

/// Immersed surface in its two roles.
#[derive(Debug, Clone)]
pub struct Geometry<T: Real> {
    /// Closed solid used to crop the grid.
    pub solid: TriangleSurface<T>,
    /// Wall sampled for Lagrangian points, trimmed away from the box faces.
    pub wall: TriangleSurface<T>,
}

fn v3<T: Real>(a: [f64; 3]) -> Vec3<T> {
    Vec3::new(lit(a[0]), lit(a[1]), lit(a[2]))
}

/// `line` with straight pieces of length `ext` added before and after.
pub fn extend_centerline<T: Real>(line: &Centerline<T>, ext: T) -> Centerline<T> {
    let (p0, t0) = line.eval(T::zero());
    let (p1, t1) = line.eval(line.length());
    let mut segments = Vec::with_capacity(line.segments.len() + 2);
    segments.push(Segment::Line {
        start: p0 - t0 * ext,
        end: p0,
    });
    segments.extend(line.segments.iter().copied());
    segments.push(Segment::Line {
        start: p1,
        end: p1 + t1 * ext,
    });
    Centerline { segments }
}

/// Coordinate axis least aligned with `t`.
fn reference_axis<T: Real>(t: &Vec3<T>) -> Vec3<T> {
    let a = t.abs();
    let k = if a[0] <= a[1] && a[0] <= a[2] {
        0
    } else if a[1] <= a[2] {
        1
    } else {
        2
    };
    let mut e = Vec3::zeros();
    e[k] = T::one();
    e
}

/// Drops wall facets outside the box and those within `margin` of a box face
/// that the solid passes through (open ends), where kernel supports would
/// leave the box.
fn trim_to_box<T: Real>(
    wall: &TriangleSurface<T>,
    solid: &TriangleSurface<T>,
    domain: &BoxDomain<T>,
    margin: T,
) -> Result<TriangleSurface<T>> {
    let (lo, hi) = (domain.min, domain.max);
    let (slo, shi) = solid.bounding_box();
    let cut_lo: Vec<bool> = (0..3).map(|a| slo[a] < lo[a]).collect();
    let cut_hi: Vec<bool> = (0..3).map(|a| shi[a] > hi[a]).collect();
    let kept = wall.filter_facets(|c| {
        (0..3).all(|a| {
            let m_lo = if cut_lo[a] { margin } else { T::zero() };
            let m_hi = if cut_hi[a] { margin } else { T::zero() };
            c[a] - lo[a] >= m_lo && hi[a] - c[a] >= m_hi
        })
    })?;
    if kept.n_facets() == 0 {
        return Err(Error::Surface(
            "no wall facets remain after trimming at the box faces".into(),
        ));
    }
    Ok(kept)
}

fn tube_geometry<T: Real>(
    line: &Centerline<T>,
    radius: T,
    up: Vec3<T>,
    cfg: &CaseConfig,
    domain: &BoxDomain<T>,
) -> Result<Geometry<T>> {
    let h: T = lit(cfg.domain.h_m);
    let long = extend_centerline(line, h * lit(CAP_OVERHANG_CELLS));
    let mesh = TubeMesh {
        radius,
        max_edge: h * lit(cfg.lagrangian.facet_edge_cells),
        s0: T::zero(),
        s1: long.length(),
        capped: true,
        up,
    };
    let solid = swept_tube(&long, &mesh)?;
    let open = swept_tube(&long, &TubeMesh { capped: false, ..mesh })?;
    let wall = trim_to_box(&open, &solid, domain, h * lit(cfg.lagrangian.trim_cells))?;
    Ok(Geometry { solid, wall })
}

/// Builds the immersed surface, or `None` for an empty box.
pub fn build_geometry<T: Real>(cfg: &CaseConfig, domain: &BoxDomain<T>) -> Result<Option<Geometry<T>>> {
    match &cfg.geometry {
        GeometryConfig::None => Ok(None),
        GeometryConfig::Tube {
            start_m,
            end_m,
            radius_m,
        } => {
            let line = Centerline::straight(v3(*start_m), v3(*end_m));
            let (_, t) = line.eval(T::zero());
            tube_geometry(&line, lit(*radius_m), reference_axis(&t), cfg, domain).map(Some)
        }
        GeometryConfig::UBend {
            origin_m,
            inlet_length_m,
            bend_radius_m,
            outlet_length_m,
            radius_m,
        } => {
            let line = u_bend_centerline(
                v3(*origin_m),
                lit(*inlet_length_m),
                lit(*bend_radius_m),
                lit(*outlet_length_m),
            );
            tube_geometry(&line, lit(*radius_m), Vec3::z(), cfg, domain).map(Some)
        }
        GeometryConfig::File { path } => {
            let solid = load_surface(path)?;
            if !solid.is_closed() {
                return Err(Error::Surface(format!("{} is not a closed surface", path.display())));
            }
            let margin = lit::<T>(cfg.domain.h_m * cfg.lagrangian.trim_cells);
            let wall = trim_to_box(&solid, &solid, domain, margin)?;
            Ok(Some(Geometry { solid, wall }))
        }
    }
}

/// Everything needed to march a case.
#[derive(Debug, Clone)]
pub struct CaseSetup<T: Real> {
    pub full_grid: EulerianGrid<T>,
    pub geometry: Option<Geometry<T>>,
    pub crop: Option<CropReport>,
    /// Lagrangian cloud when the immersed boundary is enabled.
    pub cloud: Option<LagrangianCloud<T>>,
    pub stepper: Stepper<T>,
}

/// Build, crop, resample, couple and set up the stepper.
pub fn build_case<T: Real>(cfg: &CaseConfig) -> Result<CaseSetup<T>> {
    cfg.validate()?;
    let domain = BoxDomain::new(v3(cfg.domain.min_m), v3(cfg.domain.max_m))?;
    let h: T = lit(cfg.domain.h_m);
    let full_grid = EulerianGrid::build(domain, h)?;
    let geometry = build_geometry::<T>(cfg, &domain)?;
    let cloud = match (&geometry, cfg.features.immersed_boundary) {
        (Some(g), true) => {
            let cloud = resample_uniform(&g.wall, lit(cfg.target_ds()), cfg.lagrangian.seed)?;
            log::info!("Lagrangian cloud: {} points", cloud.len());
            Some(cloud)
        }
        _ => None,
    };
    let (grid, crop) = match (&geometry, cfg.features.crop) {
        (Some(g), true) => {
            let (cropped, mut report) = crop_active_region(&full_grid, &g.solid, h * lit(cfg.domain.crop_band_cells))?;
            let (cropped, added) = match &cloud {
                Some(c) => cover_kernel_supports(&cropped, &c.points)?,
                None => (cropped, 0),
            };
            report.active_after = cropped.n_active();
            log::info!(
                "cropping: {} -> {} active nodes ({} restored for kernel supports, {:.1}% -> {:.1}% inside)",
                report.active_before,
                report.active_after,
                added,
                100.0 * report.inside_fraction_before(),
                100.0 * report.inside_fraction_after()
            );
            (cropped, Some(report))
        }
        _ => (full_grid.clone(), None),
    };
    let stepper = Stepper::new(grid, cfg.boundary.clone(), cfg.fluid, cfg.time.dt, cfg.solver)?;
    let stepper = match &cloud {
        Some(cloud) => {
            let coupling = build_coupling(stepper.grid(), cloud)?;
            stepper.with_immersed_boundary(coupling, cloud.areas.clone(), cloud.velocities.clone())?
        }
        None => stepper,
    };
    Ok(CaseSetup {
        full_grid,
        geometry,
        crop,
        cloud,
        stepper,
    })
}

#[cfg(test)]
mod tests {
    use super::super::presets::{poiseuille, preset};
    use super::*;

    #[test]
    fn extension_adds_straight_ends() {
        let line = Centerline::<f64>::straight(Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0));
        let long = extend_centerline(&line, 0.25);
        assert!((long.length() - 1.5).abs() < 1e-15);
        assert!((long.eval(0.0).0 - Vec3::new(-0.25, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn tube_wall_is_trimmed_only_at_the_open_ends() {
        let cfg = poiseuille(1e-3, 1.0);
        let dom = BoxDomain::new(Vec3::from(cfg.domain.min_m), Vec3::from(cfg.domain.max_m)).unwrap();
        let g = build_geometry::<f64>(&cfg, &dom).unwrap().unwrap();
        assert!(g.solid.is_closed());
        let (lo, hi) = g.wall.bounding_box();
        // facets are kept by centroid, so vertices may reach one edge further
        let margin = 1.5e-3 - 0.5e-3;
        assert!(lo[0] >= margin - 1e-12 && hi[0] <= 0.05 - margin + 1e-12);
        assert!(lo[0] < margin + 1e-3 && hi[0] > 0.05 - margin - 1e-3);
        // the lateral faces are 1 mm from the wall and must not trim it
        assert!(hi[1] > 0.0049 && lo[1] < -0.0049);
    }

    #[test]
    fn empty_box_has_no_geometry_or_cloud() {
        let cfg = preset("lid-driven").unwrap();
        let s = build_case::<f64>(&cfg).unwrap();
        assert!(s.geometry.is_none() && s.cloud.is_none() && s.crop.is_none());
        assert_eq!(s.stepper.grid().n_active(), 11 * 11 * 11);
    }

    #[test]
    fn poiseuille_case_crops_and_couples() {
        let cfg = poiseuille(1e-3, 1.0);
        let s = build_case::<f64>(&cfg).unwrap();
        let crop = s.crop.unwrap();
        assert!(crop.active_after < crop.active_before);
        assert!(crop.inside_fraction_after() > crop.inside_fraction_before());
        let m = s.cloud.as_ref().unwrap().len();
        // same order as the 1,632 points of the reference tube
        assert!((800..3300).contains(&m), "{m} points");
        assert!(s.stepper.immersed_boundary().is_some());
    }
}
