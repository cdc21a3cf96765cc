//! Uniform Cartesian node lattice, active-region masks and finite-difference
//! stencils on node fields.

mod crop;
mod stencil;

pub use crop::{cover_kernel_supports, crop_active_region, CropReport};
pub use stencil::{divergence, gradient, laplacian, laplacian_vector};

use crate::error::{Error, Result};
use crate::{Real, Vec3};

/// One value per active node.
pub type ScalarField<T> = Vec<T>;
/// One 3-vector per active node.
pub type VectorField<T> = Vec<Vec3<T>>;

const AXES: [char; 3] = ['x', 'y', 'z'];
const NONE: usize = usize::MAX;

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDomain<T: Real> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Real> BoxDomain<T> {
    pub fn new(min: Vec3<T>, max: Vec3<T>) -> Result<Self> {
        for a in 0..3 {
            if !(max[a] > min[a]) {
                return Err(Error::Config(format!(
                    "box max {} must exceed min {} along {}",
                    max[a], min[a], AXES[a]
                )));
            }
        }
        Ok(Self { min, max })
    }

    pub fn extent(&self) -> Vec3<T> {
        self.max - self.min
    }

    pub fn contains(&self, p: &Vec3<T>) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }
}

/// Node lattice `min + h·(i, j, k)` with an active mask.
#[derive(Debug, Clone)]
pub struct EulerianGrid<T: Real> {
    domain: BoxDomain<T>,
    h: T,
    dims: [usize; 3],
    active: Vec<bool>,
    a2g: Vec<usize>,
    g2a: Vec<usize>,
}

/// Relative tolerance on `extent / h` being an integer.
pub const DIMS_TOLERANCE: f64 = 1e-9;

impl<T: Real> EulerianGrid<T> {
    /// All nodes of the box lattice, all active. Each extent must be an integer
    /// multiple of `h` (to a relative 1e-9) and at least `4h`.
    pub fn build(domain: BoxDomain<T>, h: T) -> Result<Self> {
        if !(h > T::zero()) {
            return Err(Error::Config(format!("grid spacing must be positive, got {h}")));
        }
        let mut dims = [0usize; 3];
        let hf = h.as_f64();
        for a in 0..3 {
            let ext = domain.extent()[a].as_f64();
            let cells = ext / hf;
            if cells < 4.0 * (1.0 - DIMS_TOLERANCE) {
                return Err(Error::Config(format!(
                    "box extent {ext} along {} is smaller than 4h = {}",
                    AXES[a],
                    4.0 * hf
                )));
            }
            let rounded = cells.round();
            // f32 grids can only be checked to their own precision
            let tol = DIMS_TOLERANCE.max(8.0 * T::EPS.as_f64());
            if (cells - rounded).abs() > tol * cells {
                return Err(Error::Config(format!(
                    "box extent {ext} along {} is not a multiple of h = {hf} ({cells} cells)",
                    AXES[a]
                )));
            }
            dims[a] = rounded as usize + 1;
        }
        let n = dims[0] * dims[1] * dims[2];
        Ok(Self {
            domain,
            h,
            dims,
            active: vec![true; n],
            a2g: (0..n).collect(),
            g2a: (0..n).collect(),
        })
    }

    /// Same lattice with a new active mask.
    pub fn with_mask(&self, active: Vec<bool>) -> Result<Self> {
        if active.len() != self.n_total() {
            return Err(Error::Shape(format!(
                "mask of length {} for a lattice of {} nodes",
                active.len(),
                self.n_total()
            )));
        }
        let mut a2g = Vec::new();
        let mut g2a = vec![NONE; active.len()];
        for (g, &on) in active.iter().enumerate() {
            if on {
                g2a[g] = a2g.len();
                a2g.push(g);
            }
        }
        Ok(Self {
            domain: self.domain,
            h: self.h,
            dims: self.dims,
            active,
            a2g,
            g2a,
        })
    }

    pub fn domain(&self) -> &BoxDomain<T> {
        &self.domain
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn n_total(&self) -> usize {
        self.active.len()
    }

    /// Number of active nodes `N`.
    pub fn n_active(&self) -> usize {
        self.a2g.len()
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active
    }

    #[inline]
    pub fn global_index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.dims[0] * (ijk[1] + self.dims[1] * ijk[2])
    }

    #[inline]
    pub fn ijk(&self, g: usize) -> [usize; 3] {
        let i = g % self.dims[0];
        let r = g / self.dims[0];
        [i, r % self.dims[1], r / self.dims[1]]
    }

    #[inline]
    pub fn active_to_global(&self, a: usize) -> usize {
        self.a2g[a]
    }

    #[inline]
    pub fn global_to_active(&self, g: usize) -> Option<usize> {
        match self.g2a[g] {
            NONE => None,
            a => Some(a),
        }
    }

    /// Active index of a possibly out-of-range signed lattice position.
    #[inline]
    pub fn active_at(&self, ijk: [isize; 3]) -> Option<usize> {
        for a in 0..3 {
            if ijk[a] < 0 || ijk[a] as usize >= self.dims[a] {
                return None;
            }
        }
        self.global_to_active(self.global_index([ijk[0] as usize, ijk[1] as usize, ijk[2] as usize]))
    }

    #[inline]
    pub fn active_ijk(&self, a: usize) -> [usize; 3] {
        self.ijk(self.a2g[a])
    }

    pub fn coord_ijk(&self, ijk: [usize; 3]) -> Vec3<T> {
        Vec3::new(
            self.domain.min[0] + self.h * T::from_usize_lossy(ijk[0]),
            self.domain.min[1] + self.h * T::from_usize_lossy(ijk[1]),
            self.domain.min[2] + self.h * T::from_usize_lossy(ijk[2]),
        )
    }

    /// Coordinates of active node `a`.
    pub fn coord(&self, a: usize) -> Vec3<T> {
        self.coord_ijk(self.active_ijk(a))
    }

    /// Neighbour of active node `a` offset by `d` lattice steps along `axis`.
    #[inline]
    pub fn neighbor(&self, a: usize, axis: usize, d: isize) -> Option<usize> {
        let ijk = self.active_ijk(a);
        let mut s = [ijk[0] as isize, ijk[1] as isize, ijk[2] as isize];
        s[axis] += d;
        self.active_at(s)
    }

    /// True when the node lies on a face of the box.
    pub fn on_box_face(&self, ijk: [usize; 3]) -> bool {
        (0..3).any(|a| ijk[a] == 0 || ijk[a] + 1 == self.dims[a])
    }

    pub fn zeros_scalar(&self) -> ScalarField<T> {
        vec![T::zero(); self.n_active()]
    }

    pub fn zeros_vector(&self) -> VectorField<T> {
        vec![Vec3::zeros(); self.n_active()]
    }

    pub fn sample_scalar(&self, f: impl Fn(&Vec3<T>) -> T) -> ScalarField<T> {
        (0..self.n_active()).map(|a| f(&self.coord(a))).collect()
    }

    pub fn sample_vector(&self, f: impl Fn(&Vec3<T>) -> Vec3<T>) -> VectorField<T> {
        (0..self.n_active()).map(|a| f(&self.coord(a))).collect()
    }
}

/// Velocity, pressure and force fields carried by the time stepper.
#[derive(Debug, Clone)]
pub struct FieldState<T: Real> {
    pub u_n: VectorField<T>,
    pub u_star: VectorField<T>,
    pub u_next: VectorField<T>,
    pub p_n: ScalarField<T>,
    /// Pressure increment, `p^{n+1} − pⁿ`.
    pub phi: ScalarField<T>,
    pub f_body: VectorField<T>,
    pub time: T,
    pub step: usize,
}

impl<T: Real> FieldState<T> {
    pub fn zeros(grid: &EulerianGrid<T>) -> Self {
        Self {
            u_n: grid.zeros_vector(),
            u_star: grid.zeros_vector(),
            u_next: grid.zeros_vector(),
            p_n: grid.zeros_scalar(),
            phi: grid.zeros_scalar(),
            f_body: grid.zeros_vector(),
            time: T::zero(),
            step: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_box() -> BoxDomain<f64> {
        BoxDomain::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)).unwrap()
    }

    #[test]
    fn half_spacing_gives_27_nodes() {
        let g = EulerianGrid::build(unit_box(), 0.25).unwrap();
        assert_eq!(g.dims(), [5, 5, 5]);
        let b = BoxDomain::new(Vec3::zeros(), Vec3::new(2.0, 2.0, 2.0)).unwrap();
        let g = EulerianGrid::build(b, 0.5).unwrap();
        assert_eq!(g.n_total(), 125);
    }

    #[test]
    fn unit_box_at_half_is_too_small() {
        // [0,1]³ at h=0.5 has 3x3x3 = 27 nodes but extent 2h < 4h
        let err = EulerianGrid::build(unit_box(), 0.5).unwrap_err();
        assert!(err.to_string().contains("along x"), "{err}");
    }

    #[test]
    fn non_divisible_extent_is_rejected() {
        let err = EulerianGrid::build(unit_box(), 0.15).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("not a multiple"));
    }

    #[test]
    fn small_extent_names_axis() {
        let b = BoxDomain::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 0.3)).unwrap();
        let err = EulerianGrid::build(b, 0.1).unwrap_err();
        assert!(err.to_string().contains("along z"), "{err}");
    }

    #[test]
    fn poiseuille_box_node_count() {
        let b = BoxDomain::new(Vec3::new(0.0, -0.006, -0.006), Vec3::new(0.05, 0.006, 0.006)).unwrap();
        let g = EulerianGrid::build(b, 1e-3).unwrap();
        assert_eq!(g.dims(), [51, 13, 13]);
        // the tetrahedral box mesh in the reference run had 8,619 vertices
        assert_eq!(g.n_total(), 8619);
    }

    #[test]
    fn coordinates_follow_lattice() {
        let g = EulerianGrid::build(unit_box(), 0.25).unwrap();
        let a = g.global_to_active(g.global_index([1, 2, 3])).unwrap();
        let x = g.coord(a);
        assert_eq!((x[0], x[1], x[2]), (0.25, 0.5, 0.75));
        assert_eq!(g.neighbor(a, 2, 1).map(|b| g.active_ijk(b)), Some([1, 2, 4]));
        assert_eq!(g.neighbor(a, 2, 2), None);
    }

    #[test]
    fn f32_grid_builds() {
        let b = BoxDomain::<f32>::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)).unwrap();
        let g = EulerianGrid::build(b, 0.1).unwrap();
        assert_eq!(g.dims(), [11, 11, 11]);
    }

    proptest! {
        #[test]
        fn index_maps_round_trip(seed in any::<u64>()) {
            let g = EulerianGrid::build(unit_box(), 0.125).unwrap();
            let mask: Vec<bool> = (0..g.n_total())
                .map(|i| (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ seed)
                .map(|v| v % 3 != 0)
                .collect();
            let c = g.with_mask(mask.clone()).unwrap();
            for a in 0..c.n_active() {
                prop_assert_eq!(c.global_to_active(c.active_to_global(a)), Some(a));
            }
            for (gi, on) in mask.iter().enumerate() {
                prop_assert_eq!(c.global_to_active(gi).is_some(), *on);
            }
        }
    }
}
