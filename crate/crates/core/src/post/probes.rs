//! Line probes: trilinear samples of the grid fields written as CSV.
//!
//! Columns: `s_m,x_m,y_m,z_m,u_x_m_per_s,u_y_m_per_s,u_z_m_per_s,p_pa`, where
//! `s_m` is the distance from the line start. Samples whose surrounding cell
//! has an inactive corner are written as `nan`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::EulerianGrid;
use crate::{Real, Vec3};

pub const PROBE_HEADER: &str = "s_m,x_m,y_m,z_m,u_x_m_per_s,u_y_m_per_s,u_z_m_per_s,p_pa";

/// Trilinear interpolation of `(u, p)` at `x`, or `None` when `x` is outside
/// the box or a corner of its cell is inactive.
pub fn trilinear<T: Real>(grid: &EulerianGrid<T>, u: &[Vec3<T>], p: &[T], x: &Vec3<T>) -> Option<(Vec3<f64>, f64)> {
    let h = grid.h().as_f64();
    let min = grid.domain().min;
    let dims = grid.dims();
    let mut base = [0isize; 3];
    let mut frac = [0.0f64; 3];
    for a in 0..3 {
        let s = (x[a] - min[a]).as_f64() / h;
        if !(s >= -1e-9 && s <= (dims[a] - 1) as f64 + 1e-9) {
            return None;
        }
        let i = (s.floor() as isize).clamp(0, dims[a] as isize - 2);
        base[a] = i;
        frac[a] = (s - i as f64).clamp(0.0, 1.0);
    }
    let mut uu = Vec3::zeros();
    let mut pp = 0.0;
    for c in 0..8 {
        let o = [c & 1, (c >> 1) & 1, (c >> 2) & 1];
        let mut w = 1.0;
        for a in 0..3 {
            w *= if o[a] == 1 { frac[a] } else { 1.0 - frac[a] };
        }
        if w == 0.0 {
            continue;
        }
        let node = grid.active_at([
            base[0] + o[0] as isize,
            base[1] + o[1] as isize,
            base[2] + o[2] as isize,
        ])?;
        uu += Vec3::new(u[node][0].as_f64(), u[node][1].as_f64(), u[node][2].as_f64()) * w;
        pp += p[node].as_f64() * w;
    }
    Some((uu, pp))
}

/// One probe sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSample {
    pub s: f64,
    pub x: Vec3<f64>,
    pub u: Vec3<f64>,
    pub p: f64,
}

/// `samples` equally spaced points from `start` to `end`, inclusive.
pub fn sample_line<T: Real>(
    grid: &EulerianGrid<T>,
    u: &[Vec3<T>],
    p: &[T],
    start: [f64; 3],
    end: [f64; 3],
    samples: usize,
) -> Result<Vec<ProbeSample>> {
    if samples < 2 {
        return Err(Error::Config("a probe line needs at least 2 samples".into()));
    }
    let (a, b) = (Vec3::from(start), Vec3::from(end));
    let len = (b - a).norm();
    Ok((0..samples)
        .map(|k| {
            let t = k as f64 / (samples - 1) as f64;
            let x = a + (b - a) * t;
            let xt = Vec3::new(
                T::from_f64(x[0]).unwrap(),
                T::from_f64(x[1]).unwrap(),
                T::from_f64(x[2]).unwrap(),
            );
            let (u, p) = trilinear(grid, u, p, &xt).unwrap_or((Vec3::repeat(f64::NAN), f64::NAN));
            ProbeSample { s: t * len, x, u, p }
        })
        .collect())
}

pub fn probe_csv(samples: &[ProbeSample]) -> String {
    let mut s = String::from(PROBE_HEADER);
    s.push('\n');
    for q in samples {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            q.s, q.x[0], q.x[1], q.x[2], q.u[0], q.u[1], q.u[2], q.p
        );
    }
    s
}

pub fn write_probe_csv(samples: &[ProbeSample], path: &Path) -> Result<()> {
    std::fs::write(path, probe_csv(samples)).map_err(|e| Error::io(path, e))
}
