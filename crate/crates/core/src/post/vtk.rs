//! Legacy ASCII VTK export (structured points and polydata) and a reader for
//! the subset written here. Values are printed in shortest round-trip form,
//! so reading a file back reproduces the written numbers exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::EulerianGrid;
use crate::{Real, Vec3};

/// Named point-data arrays.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointData {
    pub scalars: Vec<(String, Vec<f64>)>,
    pub vectors: Vec<(String, Vec<[f64; 3]>)>,
}

impl PointData {
    pub fn scalar(&self, name: &str) -> Option<&[f64]> {
        self.scalars.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn vector(&self, name: &str) -> Option<&[[f64; 3]]> {
        self.vectors.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    fn check(&self, n: usize) -> Result<()> {
        for (name, v) in &self.scalars {
            if v.len() != n {
                return Err(Error::Shape(format!(
                    "array {name} has {} values for {n} points",
                    v.len()
                )));
            }
        }
        for (name, v) in &self.vectors {
            if v.len() != n {
                return Err(Error::Shape(format!(
                    "array {name} has {} values for {n} points",
                    v.len()
                )));
            }
        }
        Ok(())
    }

    fn write(&self, out: &mut String, n: usize) {
        let _ = writeln!(out, "POINT_DATA {n}");
        for (name, v) in &self.scalars {
            let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for x in v {
                let _ = writeln!(out, "{x}");
            }
        }
        for (name, v) in &self.vectors {
            let _ = writeln!(out, "VECTORS {name} double");
            for x in v {
                let _ = writeln!(out, "{} {} {}", x[0], x[1], x[2]);
            }
        }
    }
}

/// Uniform lattice with point data on every lattice node.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredPoints {
    pub dims: [usize; 3],
    pub origin: [f64; 3],
    pub spacing: f64,
    pub data: PointData,
}

fn vec3<T: Real>(v: &Vec3<T>) -> [f64; 3] {
    [v[0].as_f64(), v[1].as_f64(), v[2].as_f64()]
}

/// Grid velocity and pressure on the full lattice; inactive nodes carry
/// zeros and `active = 0`.
pub fn grid_fields<T: Real>(grid: &EulerianGrid<T>, u: &[Vec3<T>], p: &[T]) -> Result<StructuredPoints> {
    if u.len() != grid.n_active() || p.len() != grid.n_active() {
        return Err(Error::Shape("fields do not match the active nodes".into()));
    }
    let n = grid.n_total();
    let mut vel = vec![[0.0; 3]; n];
    let mut pres = vec![0.0; n];
    let mut active = vec![0.0; n];
    for a in 0..grid.n_active() {
        let g = grid.active_to_global(a);
        vel[g] = vec3(&u[a]);
        pres[g] = p[a].as_f64();
        active[g] = 1.0;
    }
    let min = grid.domain().min;
    Ok(StructuredPoints {
        dims: grid.dims(),
        origin: vec3(&min),
        spacing: grid.h().as_f64(),
        data: PointData {
            scalars: vec![("pressure".into(), pres), ("active".into(), active)],
            vectors: vec![("velocity".into(), vel)],
        },
    })
}

impl StructuredPoints {
    pub fn n_points(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn to_vtk_string(&self, title: &str) -> Result<String> {
        self.data.check(self.n_points())?;
        let mut s = String::new();
        let d = self.dims;
        let o = self.origin;
        let h = self.spacing;
        let _ = writeln!(
            s,
            "# vtk DataFile Version 3.0\n{}\nASCII\nDATASET STRUCTURED_POINTS",
            one_line(title)
        );
        let _ = writeln!(s, "DIMENSIONS {} {} {}", d[0], d[1], d[2]);
        let _ = writeln!(s, "ORIGIN {} {} {}", o[0], o[1], o[2]);
        let _ = writeln!(s, "SPACING {h} {h} {h}");
        self.data.write(&mut s, self.n_points());
        Ok(s)
    }

    pub fn write(&self, path: &Path, title: &str) -> Result<()> {
        std::fs::write(path, self.to_vtk_string(title)?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|d| Error::Parse {
            path: path.into(),
            detail: d,
        })
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut r = Reader::new(text)?;
        r.expect("DATASET")?;
        r.expect("STRUCTURED_POINTS")?;
        r.expect("DIMENSIONS")?;
        let dims = [r.usize()?, r.usize()?, r.usize()?];
        r.expect("ORIGIN")?;
        let origin = [r.f64()?, r.f64()?, r.f64()?];
        r.expect("SPACING")?;
        let spacing = r.f64()?;
        for _ in 0..2 {
            if r.f64()? != spacing {
                return Err("anisotropic spacing is not supported".into());
            }
        }
        let n: usize = dims.iter().product();
        let data = r.point_data(n)?;
        Ok(Self {
            dims,
            origin,
            spacing,
            data,
        })
    }
}

/// Scattered points (vertex cells) with point data.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyData {
    pub points: Vec<[f64; 3]>,
    pub data: PointData,
}

impl PolyData {
    pub fn from_points<T: Real>(points: &[Vec3<T>]) -> Self {
        Self {
            points: points.iter().map(vec3).collect(),
            data: PointData::default(),
        }
    }

    pub fn add_scalar<T: Real>(&mut self, name: &str, v: &[T]) {
        self.data
            .scalars
            .push((name.into(), v.iter().map(|x| x.as_f64()).collect()));
    }

    pub fn add_vector<T: Real>(&mut self, name: &str, v: &[Vec3<T>]) {
        self.data.vectors.push((name.into(), v.iter().map(vec3).collect()));
    }

    pub fn to_vtk_string(&self, title: &str) -> Result<String> {
        let n = self.points.len();
        self.data.check(n)?;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# vtk DataFile Version 3.0\n{}\nASCII\nDATASET POLYDATA",
            one_line(title)
        );
        let _ = writeln!(s, "POINTS {n} double");
        for p in &self.points {
            let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
        }
        let _ = writeln!(s, "VERTICES {n} {}", 2 * n);
        for i in 0..n {
            let _ = writeln!(s, "1 {i}");
        }
        self.data.write(&mut s, n);
        Ok(s)
    }

    pub fn write(&self, path: &Path, title: &str) -> Result<()> {
        std::fs::write(path, self.to_vtk_string(title)?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|d| Error::Parse {
            path: path.into(),
            detail: d,
        })
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut r = Reader::new(text)?;
        r.expect("DATASET")?;
        r.expect("POLYDATA")?;
        r.expect("POINTS")?;
        let n = r.usize()?;
        r.next()?;
        let mut points = Vec::with_capacity(n);
        for _ in 0..n {
            points.push([r.f64()?, r.f64()?, r.f64()?]);
        }
        r.expect("VERTICES")?;
        let cells = r.usize()?;
        let size = r.usize()?;
        for _ in 0..size {
            r.next()?;
        }
        if cells != n {
            return Err(format!("{cells} vertex cells for {n} points"));
        }
        let data = r.point_data(n)?;
        Ok(Self { points, data })
    }
}

fn one_line(title: &str) -> String {
    let t: String = title
        .chars()
        .map(|c| if c == '\n' || c == '\r' { ' ' } else { c })
        .collect();
    if t.trim().is_empty() {
        "ibflow".into()
    } else {
        t.chars().take(255).collect()
    }
}

struct Reader<'a> {
    tokens: std::iter::Peekable<std::str::SplitAsciiWhitespace<'a>>,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> std::result::Result<Self, String> {
        let mut lines = text.splitn(4, '\n');
        let magic = lines.next().unwrap_or("");
        if !magic.starts_with("# vtk DataFile") {
            return Err("missing VTK header".into());
        }
        let _title = lines.next().ok_or("missing title line")?;
        if lines.next().map(str::trim) != Some("ASCII") {
            return Err("only ASCII files are supported".into());
        }
        let body = lines.next().unwrap_or("");
        Ok(Self {
            tokens: body.split_ascii_whitespace().peekable(),
        })
    }

    fn next(&mut self) -> std::result::Result<&'a str, String> {
        self.tokens.next().ok_or_else(|| "unexpected end of file".to_string())
    }

    fn expect(&mut self, word: &str) -> std::result::Result<(), String> {
        let t = self.next()?;
        if t == word {
            Ok(())
        } else {
            Err(format!("expected {word}, found {t}"))
        }
    }

    fn usize(&mut self) -> std::result::Result<usize, String> {
        let t = self.next()?;
        t.parse().map_err(|_| format!("bad integer {t}"))
    }

    fn f64(&mut self) -> std::result::Result<f64, String> {
        let t = self.next()?;
        t.parse().map_err(|_| format!("bad number {t}"))
    }

    fn point_data(&mut self, n: usize) -> std::result::Result<PointData, String> {
        let mut data = PointData::default();
        if self.tokens.peek().is_none() {
            return Ok(data);
        }
        self.expect("POINT_DATA")?;
        if self.usize()? != n {
            return Err("POINT_DATA count does not match the points".into());
        }
        while let Some(kind) = self.tokens.next() {
            let name = self.next()?.to_string();
            match kind {
                "SCALARS" => {
                    self.next()?;
                    if self.tokens.peek().and_then(|t| t.parse::<usize>().ok()).is_some() {
                        self.next()?;
                    }
                    self.expect("LOOKUP_TABLE")?;
                    self.next()?;
                    let v = (0..n).map(|_| self.f64()).collect::<std::result::Result<_, _>>()?;
                    data.scalars.push((name, v));
                }
                "VECTORS" => {
                    self.next()?;
                    let v = (0..n)
                        .map(|_| Ok([self.f64()?, self.f64()?, self.f64()?]))
                        .collect::<std::result::Result<_, String>>()?;
                    data.vectors.push((name, v));
                }
                other => return Err(format!("unsupported section {other}")),
            }
        }
        Ok(data)
    }
}
