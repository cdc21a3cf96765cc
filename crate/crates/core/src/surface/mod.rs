//! Triangle surfaces, Lagrangian point clouds and inside/outside queries.

mod inside;
mod io;
mod sample;
pub mod shapes;

pub use inside::{closest_point_on_triangle, point_in_solid, triangle_intersects_cube, winding_number, ScanlineInside};
pub use io::{load_surface, read_cloud_csv, read_obj, read_stl, write_cloud_csv, write_obj, write_stl};
pub(crate) use sample::HashGrid;
pub use sample::{resample_uniform, LagrangianCloud, DEFAULT_SEED};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::{lit, Real, Vec3};

/// Indexed triangle surface with outward facet normals.
#[derive(Debug, Clone)]
pub struct TriangleSurface<T: Real> {
    vertices: Vec<Vec3<T>>,
    facets: Vec<[usize; 3]>,
    normals: Vec<Vec3<T>>,
    areas: Vec<T>,
    closed: bool,
}

/// Facet edge length and area statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceStats<T> {
    pub edge_mean: T,
    pub edge_std: T,
    pub area_mean: T,
    pub area_std: T,
    pub n_facets: usize,
}

/// Merges vertices closer than `tol` and returns the indexed facets.
pub fn weld<T: Real>(triangles: &[[Vec3<T>; 3]], tol: T) -> (Vec<Vec3<T>>, Vec<[usize; 3]>) {
    let key = |p: &Vec3<T>| -> [i64; 3] {
        let q = |v: T| (v / tol).floor().to_i64().unwrap_or(i64::MAX);
        [q(p[0]), q(p[1]), q(p[2])]
    };
    let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    let mut vertices: Vec<Vec3<T>> = Vec::new();
    let mut facets = Vec::with_capacity(triangles.len());
    for tri in triangles {
        let mut f = [0usize; 3];
        for (c, p) in tri.iter().enumerate() {
            let k = key(p);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(list) = buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                            for &v in list {
                                if (vertices[v] - p).amax() <= tol {
                                    found = Some(v);
                                    break 'search;
                                }
                            }
                        }
                    }
                }
            }
            f[c] = found.unwrap_or_else(|| {
                vertices.push(*p);
                buckets.entry(k).or_default().push(vertices.len() - 1);
                vertices.len() - 1
            });
        }
        facets.push(f);
    }
    (vertices, facets)
}

fn bbox_diag_of<T: Real>(pts: impl Iterator<Item = Vec3<T>>) -> T {
    let mut lo = Vec3::repeat(T::max_value().unwrap());
    let mut hi = -lo;
    for p in pts {
        lo = lo.inf(&p);
        hi = hi.sup(&p);
    }
    (hi - lo).norm()
}

impl<T: Real> TriangleSurface<T> {
    /// Welds a triangle soup and validates it as a closed surface.
    pub fn from_triangles(triangles: &[[Vec3<T>; 3]]) -> Result<Self> {
        let (v, f) = Self::weld_soup(triangles)?;
        Self::new_closed(v, f)
    }

    fn weld_soup(triangles: &[[Vec3<T>; 3]]) -> Result<(Vec<Vec3<T>>, Vec<[usize; 3]>)> {
        if triangles.is_empty() {
            return Err(Error::Surface("surface has no facets".into()));
        }
        let diag = bbox_diag_of(triangles.iter().flat_map(|t| t.iter().copied()));
        let tol = if diag > T::zero() { diag * lit(1e-9) } else { T::one() };
        Ok(weld(triangles, tol))
    }

    /// Closed, consistently oriented surface. Winding is made consistent and
    /// then flipped if needed so that the enclosed signed volume is positive.
    pub fn new_closed(vertices: Vec<Vec3<T>>, facets: Vec<[usize; 3]>) -> Result<Self> {
        Self::build(vertices, facets, true)
    }

    /// Surface that may have boundary edges (an uncapped tube, say). Every
    /// interior edge must still be shared by exactly two facets.
    pub fn new_open(vertices: Vec<Vec3<T>>, facets: Vec<[usize; 3]>) -> Result<Self> {
        Self::build(vertices, facets, false)
    }

    fn build(vertices: Vec<Vec3<T>>, mut facets: Vec<[usize; 3]>, require_closed: bool) -> Result<Self> {
        if facets.is_empty() {
            return Err(Error::Surface("surface has no facets".into()));
        }
        for (i, f) in facets.iter().enumerate() {
            if f.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Surface(format!("facet {i} references a missing vertex")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Surface(format!("facet {i} has zero area (repeated vertex)")));
            }
        }
        let diag = bbox_diag_of(vertices.iter().copied());
        let area_floor = diag * diag * lit(1e-14);
        for (i, f) in facets.iter().enumerate() {
            let a = (vertices[f[1]] - vertices[f[0]])
                .cross(&(vertices[f[2]] - vertices[f[0]]))
                .norm();
            if !(a > area_floor) {
                return Err(Error::Surface(format!("facet {i} has zero area")));
            }
        }
        // undirected edge -> incident facets
        let mut edges: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (i, f) in facets.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                edges.entry((a.min(b), a.max(b))).or_default().push(i);
            }
        }
        let mut boundary = false;
        let mut sorted: Vec<_> = edges.iter().collect();
        sorted.sort_by_key(|(k, _)| **k);
        for (&(a, b), inc) in &sorted {
            match inc.len() {
                1 if require_closed => {
                    return Err(Error::Surface(format!(
                        "open boundary: edge ({a}, {b}) of facet {} has no neighbour",
                        inc[0]
                    )))
                }
                1 => boundary = true,
                2 => {}
                _ => {
                    return Err(Error::Surface(format!(
                        "non-manifold edge ({a}, {b}) shared by facets {:?}",
                        inc
                    )))
                }
            }
        }
        orient_consistently(&mut facets, &edges)?;
        let mut s = Self {
            vertices,
            facets,
            normals: Vec::new(),
            areas: Vec::new(),
            closed: !boundary,
        };
        s.refresh();
        if s.closed && s.signed_volume() < T::zero() {
            for f in &mut s.facets {
                f.swap(1, 2);
            }
            s.refresh();
        }
        Ok(s)
    }

    fn refresh(&mut self) {
        let (normals, areas) = self
            .facets
            .iter()
            .map(|f| {
                let c = (self.vertices[f[1]] - self.vertices[f[0]]).cross(&(self.vertices[f[2]] - self.vertices[f[0]]));
                let n = c.norm();
                (c / n, n * lit(0.5))
            })
            .unzip();
        self.normals = normals;
        self.areas = areas;
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[[usize; 3]] {
        &self.facets
    }

    pub fn normals(&self) -> &[Vec3<T>] {
        &self.normals
    }

    pub fn areas(&self) -> &[T] {
        &self.areas
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn triangle(&self, i: usize) -> [Vec3<T>; 3] {
        let f = self.facets[i];
        [self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]]
    }

    pub fn total_area(&self) -> T {
        self.areas.iter().fold(T::zero(), |a, &b| a + b)
    }

    /// Enclosed volume by the divergence theorem; positive for outward normals.
    pub fn signed_volume(&self) -> T {
        let six = lit::<T>(6.0);
        (0..self.n_facets()).fold(T::zero(), |acc, i| {
            let [a, b, c] = self.triangle(i);
            acc + a.dot(&b.cross(&c)) / six
        })
    }

    pub fn bounding_box(&self) -> (Vec3<T>, Vec3<T>) {
        let mut lo = self.vertices[0];
        let mut hi = lo;
        for p in &self.vertices {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> T {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    /// Keeps the facets whose centroid satisfies `keep`; the result may be open.
    pub fn filter_facets(&self, keep: impl Fn(&Vec3<T>) -> bool) -> Result<Self> {
        let third = lit::<T>(1.0 / 3.0);
        let facets: Vec<[usize; 3]> = (0..self.n_facets())
            .filter(|&i| {
                let [a, b, c] = self.triangle(i);
                keep(&((a + b + c) * third))
            })
            .map(|i| self.facets[i])
            .collect();
        let mut used = vec![usize::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        let facets = facets
            .into_iter()
            .map(|f| {
                f.map(|v| {
                    if used[v] == usize::MAX {
                        used[v] = vertices.len();
                        vertices.push(self.vertices[v]);
                    }
                    used[v]
                })
            })
            .collect();
        Self::new_open(vertices, facets)
    }
}

fn orient_consistently(facets: &mut [[usize; 3]], edges: &HashMap<(usize, usize), Vec<usize>>) -> Result<()> {
    let n = facets.len();
    let mut state = vec![0u8; n]; // 0 unvisited, 1 kept
    for seed in 0..n {
        if state[seed] != 0 {
            continue;
        }
        state[seed] = 1;
        let mut stack = vec![seed];
        while let Some(i) = stack.pop() {
            let f = facets[i];
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                for &j in &edges[&(a.min(b), a.max(b))] {
                    if j == i {
                        continue;
                    }
                    let g = facets[j];
                    // consistent neighbour traverses the edge as b -> a
                    let same_dir = (0..3).any(|k| g[k] == a && g[(k + 1) % 3] == b);
                    if state[j] == 0 {
                        if same_dir {
                            facets[j].swap(1, 2);
                        }
                        state[j] = 1;
                        stack.push(j);
                    } else if same_dir {
                        return Err(Error::Surface(format!(
                            "surface is not orientable (facets {i} and {j})"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

fn mean_std<T: Real>(vals: impl Iterator<Item = T> + Clone) -> (T, T) {
    let n = T::from_usize_lossy(vals.clone().count());
    let mean = vals.clone().fold(T::zero(), |a, b| a + b) / n;
    let var = vals.fold(T::zero(), |a, b| a + (b - mean) * (b - mean)) / n;
    (mean, var.sqrt())
}

/// Mean and population standard deviation of facet edge lengths and areas.
pub fn facet_stats<T: Real>(s: &TriangleSurface<T>) -> SurfaceStats<T> {
    let edges: Vec<T> = (0..s.n_facets())
        .flat_map(|i| {
            let [a, b, c] = s.triangle(i);
            [(b - a).norm(), (c - b).norm(), (a - c).norm()]
        })
        .collect();
    let (edge_mean, edge_std) = mean_std(edges.iter().copied());
    let (area_mean, area_std) = mean_std(s.areas().iter().copied());
    SurfaceStats {
        edge_mean,
        edge_std,
        area_mean,
        area_std,
        n_facets: s.n_facets(),
    }
}

/// Equal-width histogram: returns `(bin_edges, counts)` with `bins + 1` edges.
pub fn histogram<T: Real>(values: &[T], bins: usize) -> (Vec<T>, Vec<usize>) {
    let bins = bins.max(1);
    let lo = values.iter().copied().fold(T::max_value().unwrap(), |a, b| a.min(b));
    let hi = values.iter().copied().fold(T::min_value().unwrap(), |a, b| a.max(b));
    let width = if hi > lo {
        (hi - lo) / T::from_usize_lossy(bins)
    } else {
        T::one()
    };
    let edges = (0..=bins).map(|k| lo + width * T::from_usize_lossy(k)).collect();
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = ((v - lo) / width).floor().to_usize().unwrap_or(0).min(bins - 1);
        counts[k] += 1;
    }
    (edges, counts)
}
