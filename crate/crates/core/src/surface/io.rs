use std::fs;
use std::io::Write;
use std::path::Path;

use super::{LagrangianCloud, TriangleSurface};
use crate::error::{Error, Result};
use crate::{lit, Real, Vec3};

fn parse_err(path: &Path, detail: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        detail: detail.into(),
    }
}

/// Reads an STL file (binary or ASCII) into a triangle soup.
pub fn read_stl<T: Real>(path: &Path) -> Result<Vec<[Vec3<T>; 3]>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let binary_len = |n: usize| 84 + 50 * n;
    if bytes.len() >= 84 {
        let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
        if bytes.len() == binary_len(n) {
            return Ok(parse_stl_binary(&bytes, n));
        }
    }
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| parse_err(path, "neither a binary STL of consistent length nor ASCII"))?;
    parse_stl_ascii(text).map_err(|d| parse_err(path, d))
}

fn parse_stl_binary<T: Real>(bytes: &[u8], n: usize) -> Vec<[Vec3<T>; 3]> {
    let f = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as f64;
    (0..n)
        .map(|i| {
            let base = 84 + 50 * i + 12;
            let v = |k: usize| {
                let o = base + 12 * k;
                Vec3::new(lit::<T>(f(o)), lit(f(o + 4)), lit(f(o + 8)))
            };
            [v(0), v(1), v(2)]
        })
        .collect()
}

fn parse_stl_ascii<T: Real>(text: &str) -> std::result::Result<Vec<[Vec3<T>; 3]>, String> {
    let mut tris = Vec::new();
    let mut cur: Vec<Vec3<T>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("vertex") => {
                let mut c = [T::zero(); 3];
                for v in &mut c {
                    let tok = it.next().ok_or(format!("line {}: short vertex", ln + 1))?;
                    let x: f64 = tok
                        .parse()
                        .map_err(|_| format!("line {}: bad number {tok:?}", ln + 1))?;
                    *v = lit(x);
                }
                cur.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("endfacet") => {
                if cur.len() != 3 {
                    return Err(format!("line {}: facet with {} vertices", ln + 1, cur.len()));
                }
                tris.push([cur[0], cur[1], cur[2]]);
                cur.clear();
            }
            _ => {}
        }
    }
    if tris.is_empty() {
        return Err("no facets found".into());
    }
    Ok(tris)
}

/// Reads a Wavefront OBJ file; polygons are fan-triangulated.
pub fn read_obj<T: Real>(path: &Path) -> Result<Vec<[Vec3<T>; 3]>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut verts: Vec<Vec3<T>> = Vec::new();
    let mut tris = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| parse_err(path, format!("line {}: bad vertex", ln + 1)))?;
                if c.len() != 3 {
                    return Err(parse_err(path, format!("line {}: short vertex", ln + 1)));
                }
                verts.push(Vec3::new(lit(c[0]), lit(c[1]), lit(c[2])));
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|tok| {
                        let first = tok.split('/').next().unwrap_or("");
                        let k: i64 = first
                            .parse()
                            .map_err(|_| parse_err(path, format!("line {}: bad face index {tok:?}", ln + 1)))?;
                        let r = if k < 0 { verts.len() as i64 + k } else { k - 1 };
                        if r < 0 || r as usize >= verts.len() {
                            return Err(parse_err(path, format!("line {}: index {k} out of range", ln + 1)));
                        }
                        Ok(r as usize)
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(parse_err(
                        path,
                        format!("line {}: face with fewer than 3 vertices", ln + 1),
                    ));
                }
                for k in 1..idx.len() - 1 {
                    tris.push([verts[idx[0]], verts[idx[k]], verts[idx[k + 1]]]);
                }
            }
            _ => {}
        }
    }
    if tris.is_empty() {
        return Err(parse_err(path, "no faces found"));
    }
    Ok(tris)
}

/// Loads and validates a closed surface from `.stl` or `.obj`.
pub fn load_surface<T: Real>(path: &Path) -> Result<TriangleSurface<T>> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let tris = match ext.as_deref() {
        Some("stl") => read_stl(path)?,
        Some("obj") => read_obj(path)?,
        _ => {
            return Err(Error::Config(format!(
                "unsupported surface format {} (expected .stl or .obj)",
                path.display()
            )))
        }
    };
    TriangleSurface::from_triangles(&tris).map_err(|e| match e {
        Error::Surface(d) => Error::Surface(format!("{}: {d}", path.display())),
        other => other,
    })
}

/// Writes a binary STL, or ASCII when `ascii` is set.
pub fn write_stl<T: Real>(s: &TriangleSurface<T>, path: &Path, ascii: bool) -> Result<()> {
    let mut out: Vec<u8> = Vec::new();
    if ascii {
        writeln!(out, "solid ibflow").unwrap();
        for i in 0..s.n_facets() {
            let n = s.normals()[i];
            writeln!(out, "  facet normal {:e} {:e} {:e}", n[0], n[1], n[2]).unwrap();
            writeln!(out, "    outer loop").unwrap();
            for p in s.triangle(i) {
                writeln!(out, "      vertex {:e} {:e} {:e}", p[0], p[1], p[2]).unwrap();
            }
            writeln!(out, "    endloop").unwrap();
            writeln!(out, "  endfacet").unwrap();
        }
        writeln!(out, "endsolid ibflow").unwrap();
    } else {
        let mut header = [0u8; 80];
        header[..13].copy_from_slice(b"ibflow binary");
        out.extend_from_slice(&header);
        out.extend_from_slice(&(s.n_facets() as u32).to_le_bytes());
        for i in 0..s.n_facets() {
            let n = s.normals()[i];
            for c in 0..3 {
                out.extend_from_slice(&(n[c].as_f64() as f32).to_le_bytes());
            }
            for p in s.triangle(i) {
                for c in 0..3 {
                    out.extend_from_slice(&(p[c].as_f64() as f32).to_le_bytes());
                }
            }
            out.extend_from_slice(&[0, 0]);
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_obj<T: Real>(s: &TriangleSurface<T>, path: &Path) -> Result<()> {
    let mut out = String::new();
    for p in s.vertices() {
        out.push_str(&format!("v {:e} {:e} {:e}\n", p[0], p[1], p[2]));
    }
    for f in s.facets() {
        out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Cloud CSV with header `x,y,z,nx,ny,nz,dS`.
pub fn write_cloud_csv<T: Real>(c: &LagrangianCloud<T>, path: &Path) -> Result<()> {
    let mut out = String::from("x,y,z,nx,ny,nz,dS\n");
    for i in 0..c.len() {
        let (p, n) = (c.points[i], c.normals[i]);
        out.push_str(&format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            p[0], p[1], p[2], n[0], n[1], n[2], c.areas[i]
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a cloud written by [`write_cloud_csv`]; boundary velocities are zero.
pub fn read_cloud_csv<T: Real>(path: &Path) -> Result<LagrangianCloud<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("x,y,z,nx,ny,nz,dS") {
        return Err(parse_err(path, "missing header x,y,z,nx,ny,nz,dS"));
    }
    let (mut points, mut normals, mut areas) = (Vec::new(), Vec::new(), Vec::new());
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(path, format!("row {}: bad number", ln + 2)))?;
        if v.len() != 7 {
            return Err(parse_err(path, format!("row {}: expected 7 columns", ln + 2)));
        }
        points.push(Vec3::new(lit(v[0]), lit(v[1]), lit(v[2])));
        normals.push(Vec3::new(lit(v[3]), lit(v[4]), lit(v[5])));
        areas.push(lit(v[6]));
    }
    let n = points.len();
    Ok(LagrangianCloud {
        points,
        normals,
        areas,
        velocities: vec![Vec3::zeros(); n],
    })
}

#[cfg(test)]
mod tests {
    use super::super::shapes::icosphere;
    use super::*;

    #[test]
    fn stl_round_trips_binary_and_ascii() {
        let dir = tempfile::tempdir().unwrap();
        let s = icosphere::<f64>(Vec3::zeros(), 1.0, 3);
        for ascii in [false, true] {
            let p = dir.path().join(if ascii { "a.stl" } else { "b.stl" });
            write_stl(&s, &p, ascii).unwrap();
            let r: TriangleSurface<f64> = load_surface(&p).unwrap();
            assert_eq!(r.n_facets(), s.n_facets());
            assert_eq!(r.vertices().len(), s.vertices().len());
            let exact = 4.0 * std::f64::consts::PI;
            assert!((r.total_area() - exact).abs() / exact < 0.01);
        }
    }

    #[test]
    fn obj_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let s = icosphere::<f64>(Vec3::zeros(), 1.0, 1);
        let p = dir.path().join("s.obj");
        write_obj(&s, &p).unwrap();
        let r: TriangleSurface<f64> = load_surface(&p).unwrap();
        assert_eq!(r.total_area(), s.total_area());
    }

    #[test]
    fn unknown_extension_is_config_error() {
        let err = load_surface::<f64>(Path::new("mesh.ply")).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
