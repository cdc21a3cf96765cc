use super::TriangleSurface;
use crate::{lit, Real, Vec3};

/// Closest point to `p` on triangle `abc` (Voronoi-region walk).
pub fn closest_point_on_triangle<T: Real>(p: &Vec3<T>, a: &Vec3<T>, b: &Vec3<T>, c: &Vec3<T>) -> Vec3<T> {
    let zero = T::zero();
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= zero && d2 <= zero {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= zero && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= zero && d1 >= zero && d3 <= zero {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= zero && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= zero && d2 >= zero && d6 <= zero {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= zero && (d4 - d3) >= zero && (d5 - d6) >= zero {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = T::one() / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Generalised winding number: total signed solid angle over 4π. Close to 1
/// inside a closed outward-oriented surface and 0 outside.
pub fn winding_number<T: Real>(s: &TriangleSurface<T>, p: &Vec3<T>) -> T {
    let mut total = T::zero();
    for i in 0..s.n_facets() {
        let [a, b, c] = s.triangle(i);
        let (a, b, c) = (a - p, b - p, c - p);
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let num = a.dot(&b.cross(&c));
        let den = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
        total += lit::<T>(2.0) * num.atan2(den);
    }
    total / (lit::<T>(4.0) * T::pi())
}

/// Inside test for a single point. Points within `1e-9 ×` the bounding-box
/// diagonal of the surface count as inside.
pub fn point_in_solid<T: Real>(s: &TriangleSurface<T>, p: &Vec3<T>) -> bool {
    let tol = s.bbox_diagonal() * lit(1e-9);
    let (lo, hi) = s.bounding_box();
    if (0..3).any(|a| p[a] < lo[a] - tol || p[a] > hi[a] + tol) {
        return false;
    }
    let near = (0..s.n_facets()).any(|i| {
        let [a, b, c] = s.triangle(i);
        (closest_point_on_triangle(p, &a, &b, &c) - p).norm() <= tol
    });
    near || winding_number(s, p) > lit(0.5)
}

/// Separating-axis test of triangle `tri` against the axis-aligned cube of
/// half-width `half` centred at `center` (touching counts as overlapping).
pub fn triangle_intersects_cube<T: Real>(tri: &[Vec3<T>; 3], center: &Vec3<T>, half: T) -> bool {
    let v = [tri[0] - center, tri[1] - center, tri[2] - center];
    for a in 0..3 {
        let lo = v[0][a].min(v[1][a]).min(v[2][a]);
        let hi = v[0][a].max(v[1][a]).max(v[2][a]);
        if lo > half || hi < -half {
            return false;
        }
    }
    let e = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];
    let n = e[0].cross(&e[1]);
    let r = half * (n[0].abs() + n[1].abs() + n[2].abs());
    if n.dot(&v[0]).abs() > r {
        return false;
    }
    for edge in &e {
        for a in 0..3 {
            let mut unit = Vec3::zeros();
            unit[a] = T::one();
            let axis = unit.cross(edge);
            let p = [axis.dot(&v[0]), axis.dot(&v[1]), axis.dot(&v[2])];
            let lo = p[0].min(p[1]).min(p[2]);
            let hi = p[0].max(p[1]).max(p[2]);
            let r = half * (axis[0].abs() + axis[1].abs() + axis[2].abs());
            if lo > r || hi < -r {
                return false;
            }
        }
    }
    true
}

/// Batch inside test on a lattice: one ray per `(y, z)` lattice line, cast
/// along +x with a tiny irrational lateral offset so it never grazes an edge
/// or vertex of the surface.
#[derive(Debug, Clone)]
pub struct ScanlineInside<T> {
    origin: Vec3<T>,
    h: T,
    dims: [usize; 3],
    /// sorted x crossings per line `j + dims[1]·k`
    crossings: Vec<Vec<T>>,
}

impl<T: Real> ScanlineInside<T> {
    pub fn new(s: &TriangleSurface<T>, origin: Vec3<T>, h: T, dims: [usize; 3]) -> Self {
        let dy = h * lit(1.234_567_890_123e-7) * lit(std::f64::consts::SQRT_2);
        let dz = h * lit(1.234_567_890_123e-7) * lit(std::f64::consts::PI / 3.0);
        let mut crossings = vec![Vec::new(); dims[1] * dims[2]];
        let line = |c: T, o: T| ((c - o) / h).to_f64().unwrap_or(f64::NAN);
        for i in 0..s.n_facets() {
            let [a, b, c] = s.triangle(i);
            let ylo = line(a[1].min(b[1]).min(c[1]) - dy, origin[1]).ceil().max(0.0);
            let yhi = line(a[1].max(b[1]).max(c[1]) - dy, origin[1]).floor();
            let zlo = line(a[2].min(b[2]).min(c[2]) - dz, origin[2]).ceil().max(0.0);
            let zhi = line(a[2].max(b[2]).max(c[2]) - dz, origin[2]).floor();
            if !(yhi >= ylo && zhi >= zlo) {
                continue;
            }
            let yhi = (yhi as usize).min(dims[1] - 1);
            let zhi = (zhi as usize).min(dims[2] - 1);
            for k in zlo as usize..=zhi {
                for j in ylo as usize..=yhi {
                    let py = origin[1] + h * T::from_usize_lossy(j) + dy;
                    let pz = origin[2] + h * T::from_usize_lossy(k) + dz;
                    if let Some(x) = ray_x_crossing(&a, &b, &c, py, pz) {
                        crossings[j + dims[1] * k].push(x);
                    }
                }
            }
        }
        for c in &mut crossings {
            c.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        Self {
            origin,
            h,
            dims,
            crossings,
        }
    }

    /// Parity of crossings to the right of lattice node `ijk`.
    pub fn inside(&self, ijk: [usize; 3]) -> bool {
        let x = self.origin[0] + self.h * T::from_usize_lossy(ijk[0]);
        let line = &self.crossings[ijk[1] + self.dims[1] * ijk[2]];
        let right = line.len() - line.partition_point(|&c| c <= x);
        right % 2 == 1
    }
}

/// x coordinate where the line `{(t, py, pz)}` crosses triangle `abc`, if it does.
fn ray_x_crossing<T: Real>(a: &Vec3<T>, b: &Vec3<T>, c: &Vec3<T>, py: T, pz: T) -> Option<T> {
    let e = |p: &Vec3<T>, q: &Vec3<T>| (q[1] - p[1]) * (pz - p[2]) - (q[2] - p[2]) * (py - p[1]);
    let w0 = e(b, c);
    let w1 = e(c, a);
    let w2 = e(a, b);
    let zero = T::zero();
    let pos = w0 >= zero && w1 >= zero && w2 >= zero;
    let neg = w0 <= zero && w1 <= zero && w2 <= zero;
    let sum = w0 + w1 + w2;
    if !(pos || neg) || sum == zero {
        return None;
    }
    Some((w0 * a[0] + w1 * b[0] + w2 * c[0]) / sum)
}
