//! Analytic surface generators: cube, icosahedron, icosphere and swept tubes.

use std::collections::HashMap;

use super::TriangleSurface;
use crate::error::{Error, Result};
use crate::{lit, Real, Vec3};

/// Twelve outward-wound triangles of the unit cube `[0,1]³`.
pub fn unit_cube_triangles<T: Real>() -> Vec<[Vec3<T>; 3]> {
    let p = |x: f64, y: f64, z: f64| Vec3::new(lit::<T>(x), lit(y), lit(z));
    let quads = [
        // -x, +x, -y, +y, -z, +z faces, counter-clockwise seen from outside
        [p(0., 0., 0.), p(0., 0., 1.), p(0., 1., 1.), p(0., 1., 0.)],
        [p(1., 0., 0.), p(1., 1., 0.), p(1., 1., 1.), p(1., 0., 1.)],
        [p(0., 0., 0.), p(1., 0., 0.), p(1., 0., 1.), p(0., 0., 1.)],
        [p(0., 1., 0.), p(0., 1., 1.), p(1., 1., 1.), p(1., 1., 0.)],
        [p(0., 0., 0.), p(0., 1., 0.), p(1., 1., 0.), p(1., 0., 0.)],
        [p(0., 0., 1.), p(1., 0., 1.), p(1., 1., 1.), p(0., 1., 1.)],
    ];
    quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect()
}

fn icosahedron_raw<T: Real>() -> (Vec<Vec3<T>>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let v = [
        (-1., t, 0.),
        (1., t, 0.),
        (-1., -t, 0.),
        (1., -t, 0.),
        (0., -1., t),
        (0., 1., t),
        (0., -1., -t),
        (0., 1., -t),
        (t, 0., -1.),
        (t, 0., 1.),
        (-t, 0., -1.),
        (-t, 0., 1.),
    ];
    let f = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (
        v.iter().map(|&(x, y, z)| Vec3::new(lit(x), lit(y), lit(z))).collect(),
        f,
    )
}

/// Regular icosahedron with the given edge length, centred at the origin.
pub fn icosahedron<T: Real>(edge: T) -> TriangleSurface<T> {
    let (v, f) = icosahedron_raw::<T>();
    let v = v.into_iter().map(|p| p * (edge / lit(2.0))).collect();
    TriangleSurface::new_closed(v, f).expect("icosahedron is closed")
}

/// Icosahedron refined `subdivisions` times with vertices pushed to the sphere.
pub fn icosphere<T: Real>(center: Vec3<T>, radius: T, subdivisions: usize) -> TriangleSurface<T> {
    let (mut v, mut f) = icosahedron_raw::<T>();
    for p in &mut v {
        *p = p.normalize();
    }
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(f.len() * 4);
        let mut midpoint = |a: usize, b: usize, v: &mut Vec<Vec3<T>>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                v.push(((v[a] + v[b]) * lit::<T>(0.5)).normalize());
                v.len() - 1
            })
        };
        for [a, b, c] in f {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = next;
    }
    let v = v.into_iter().map(|p| center + p * radius).collect();
    TriangleSurface::new_closed(v, f).expect("icosphere is closed")
}

/// Piece of a planar or straight tube centreline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment<T: Real> {
    Line {
        start: Vec3<T>,
        end: Vec3<T>,
    },
    /// Circular arc about `center` in the plane normal to `axis`, starting at
    /// `start` and turning by `sweep` radians (right-hand rule about `axis`).
    Arc {
        center: Vec3<T>,
        axis: Vec3<T>,
        start: Vec3<T>,
        sweep: T,
    },
}

impl<T: Real> Segment<T> {
    pub fn length(&self) -> T {
        match *self {
            Segment::Line { start, end } => (end - start).norm(),
            Segment::Arc {
                center, start, sweep, ..
            } => (start - center).norm() * sweep.abs(),
        }
    }

    /// Point and unit tangent at arc length `s` from the segment start.
    pub fn eval(&self, s: T) -> (Vec3<T>, Vec3<T>) {
        match *self {
            Segment::Line { start, end } => {
                let t = (end - start).normalize();
                (start + t * s, t)
            }
            Segment::Arc {
                center,
                axis,
                start,
                sweep,
            } => {
                let k = axis.normalize();
                let r0 = start - center;
                let rad = r0.norm();
                let phi = s / rad * sweep.signum();
                let (sn, cs) = phi.sin_cos();
                // Rodrigues rotation of r0 about k (r0 ⟂ k)
                let r = r0 * cs + k.cross(&r0) * sn;
                let t = k.cross(&r).normalize() * sweep.signum();
                (center + r, t)
            }
        }
    }
}

/// Tube centreline made of consecutive segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Centerline<T: Real> {
    pub segments: Vec<Segment<T>>,
}

impl<T: Real> Centerline<T> {
    pub fn length(&self) -> T {
        self.segments.iter().fold(T::zero(), |a, s| a + s.length())
    }

    pub fn eval(&self, s: T) -> (Vec3<T>, Vec3<T>) {
        let mut rest = s;
        for (i, seg) in self.segments.iter().enumerate() {
            let l = seg.length();
            if rest <= l || i + 1 == self.segments.len() {
                return seg.eval(rest);
            }
            rest -= l;
        }
        unreachable!("centerline has at least one segment")
    }

    /// Straight line from `start` to `end`.
    pub fn straight(start: Vec3<T>, end: Vec3<T>) -> Self {
        Self {
            segments: vec![Segment::Line { start, end }],
        }
    }

    /// Nearest centreline distance from `p`, sampled at `n` stations.
    pub fn distance_to(&self, p: &Vec3<T>, n: usize) -> T {
        let len = self.length();
        (0..=n)
            .map(|k| {
                let (c, _) = self.eval(len * T::from_usize_lossy(k) / T::from_usize_lossy(n));
                (p - c).norm()
            })
            .fold(T::max_value().unwrap(), |a, b| a.min(b))
    }
}

/// Options for [`swept_tube`].
#[derive(Debug, Clone, Copy)]
pub struct TubeMesh<T> {
    pub radius: T,
    /// Target facet edge length.
    pub max_edge: T,
    /// Arc-length window `[s0, s1]` of the centreline to mesh.
    pub s0: T,
    pub s1: T,
    /// Close both ends with flat fans.
    pub capped: bool,
    /// Reference direction never parallel to the centreline tangent.
    pub up: Vec3<T>,
}

/// Circular tube swept along `line`. The lateral facets are wound so that
/// normals point away from the centreline.
pub fn swept_tube<T: Real>(line: &Centerline<T>, o: &TubeMesh<T>) -> Result<TriangleSurface<T>> {
    if !(o.radius > T::zero() && o.max_edge > T::zero() && o.s1 > o.s0) {
        return Err(Error::Config("tube needs positive radius, edge length and span".into()));
    }
    let two_pi = lit::<T>(2.0) * T::pi();
    let n_around = ((two_pi * o.radius / o.max_edge).ceil().to_usize().unwrap_or(3)).max(8);
    let n_along = (((o.s1 - o.s0) / o.max_edge).ceil().to_usize().unwrap_or(1)).max(1);
    let mut v = Vec::with_capacity((n_along + 1) * n_around + 2);
    let mut centers = Vec::new();
    for k in 0..=n_along {
        let s = o.s0 + (o.s1 - o.s0) * T::from_usize_lossy(k) / T::from_usize_lossy(n_along);
        let (c, t) = line.eval(s);
        let u = o.up.cross(&t);
        if u.norm() < lit(1e-9) {
            return Err(Error::Config(
                "tube reference direction is parallel to the centreline".into(),
            ));
        }
        let u = u.normalize();
        let w = t.cross(&u);
        centers.push(c);
        for j in 0..n_around {
            let th = two_pi * T::from_usize_lossy(j) / T::from_usize_lossy(n_around);
            v.push(c + (u * th.cos() + w * th.sin()) * o.radius);
        }
    }
    let id = |k: usize, j: usize| k * n_around + j % n_around;
    let mut f = Vec::with_capacity(2 * n_along * n_around + 2 * n_around);
    for k in 0..n_along {
        for j in 0..n_around {
            f.push([id(k, j), id(k, j + 1), id(k + 1, j + 1)]);
            f.push([id(k, j), id(k + 1, j + 1), id(k + 1, j)]);
        }
    }
    if o.capped {
        let c0 = v.len();
        v.push(centers[0]);
        let c1 = v.len();
        v.push(centers[n_along]);
        for j in 0..n_around {
            f.push([c0, id(0, j + 1), id(0, j)]);
            f.push([c1, id(n_along, j), id(n_along, j + 1)]);
        }
        TriangleSurface::new_closed(v, f)
    } else {
        TriangleSurface::new_open(v, f)
    }
}

/// U-bend centreline: straight inlet along +y from `origin`, a 90° arc of
/// radius `bend_radius` turning towards +x, and a straight outlet along +x.
pub fn u_bend_centerline<T: Real>(origin: Vec3<T>, inlet_len: T, bend_radius: T, outlet_len: T) -> Centerline<T> {
    let ey = Vec3::new(T::zero(), T::one(), T::zero());
    let ex = Vec3::new(T::one(), T::zero(), T::zero());
    let ez = Vec3::new(T::zero(), T::zero(), T::one());
    let a0 = origin + ey * inlet_len;
    let center = a0 + ex * bend_radius;
    let a1 = center + ey * bend_radius;
    Centerline {
        segments: vec![
            Segment::Line { start: origin, end: a0 },
            // turning from +y to +x is a clockwise rotation about +z
            Segment::Arc {
                center,
                axis: ez,
                start: a0,
                sweep: -T::frac_pi_2(),
            },
            Segment::Line {
                start: a1,
                end: a1 + ex * outlet_len,
            },
        ],
    }
}
