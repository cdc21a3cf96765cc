use rayon::prelude::*;

use super::{EulerianGrid, ScalarField, VectorField};
use crate::error::{Error, Result};
use crate::{lit, Real, Vec3};

fn check_len(grid: &EulerianGrid<impl Real>, len: usize) -> Result<()> {
    if len != grid.n_active() {
        return Err(Error::Shape(format!(
            "field of length {len} on a grid with {} active nodes",
            grid.n_active()
        )));
    }
    Ok(())
}

/// First derivative along `axis`: central where both neighbours are active,
/// otherwise one-sided second order, degrading to first order or zero when
/// the region is too thin.
fn d1<T: Real>(g: &EulerianGrid<T>, a: usize, axis: usize, f: impl Fn(usize) -> T) -> T {
    let h = g.h();
    let nb = |d| g.neighbor(a, axis, d);
    let two = lit::<T>(2.0);
    match (nb(-1), nb(1)) {
        (Some(m), Some(p)) => (f(p) - f(m)) / (two * h),
        (m, p) => {
            let (s, n1, n2) = if p.is_some() {
                (T::one(), p, nb(2))
            } else {
                (-T::one(), m, nb(-2))
            };
            match (n1, n2) {
                (Some(n1), Some(n2)) => s * (lit::<T>(-3.0) * f(a) + lit::<T>(4.0) * f(n1) - f(n2)) / (two * h),
                (Some(n1), None) => s * (f(n1) - f(a)) / h,
                _ => T::zero(),
            }
        }
    }
}

/// Second derivative along `axis`. Uses the wide `(f₊₂ − 2f₀ + f₋₂)/(4h²)`
/// stencil wherever it exists so that it equals the composition of the
/// central first differences.
fn d2<T: Real>(g: &EulerianGrid<T>, a: usize, axis: usize, f: impl Fn(usize) -> T) -> T {
    let h = g.h();
    let nb = |d| g.neighbor(a, axis, d);
    let two = lit::<T>(2.0);
    let f0 = f(a);
    if let (Some(m1), Some(p1)) = (nb(-1), nb(1)) {
        if let (Some(m2), Some(p2)) = (nb(-2), nb(2)) {
            let _ = (m1, p1);
            return (f(p2) - two * f0 + f(m2)) / (lit::<T>(4.0) * h * h);
        }
        return (f(p1) - two * f0 + f(m1)) / (h * h);
    }
    for s in [1isize, -1] {
        if let (Some(n1), Some(n2)) = (nb(s), nb(2 * s)) {
            return match nb(3 * s) {
                Some(n3) => (two * f0 - lit::<T>(5.0) * f(n1) + lit::<T>(4.0) * f(n2) - f(n3)) / (h * h),
                None => (f0 - two * f(n1) + f(n2)) / (h * h),
            };
        }
    }
    T::zero()
}

pub fn gradient<T: Real>(grid: &EulerianGrid<T>, p: &[T]) -> Result<VectorField<T>> {
    check_len(grid, p.len())?;
    Ok((0..grid.n_active())
        .into_par_iter()
        .map(|a| {
            Vec3::new(
                d1(grid, a, 0, |b| p[b]),
                d1(grid, a, 1, |b| p[b]),
                d1(grid, a, 2, |b| p[b]),
            )
        })
        .collect())
}

pub fn divergence<T: Real>(grid: &EulerianGrid<T>, u: &[Vec3<T>]) -> Result<ScalarField<T>> {
    check_len(grid, u.len())?;
    Ok((0..grid.n_active())
        .into_par_iter()
        .map(|a| (0..3).fold(T::zero(), |acc, ax| acc + d1(grid, a, ax, |b| u[b][ax])))
        .collect())
}

pub fn laplacian<T: Real>(grid: &EulerianGrid<T>, q: &[T]) -> Result<ScalarField<T>> {
    check_len(grid, q.len())?;
    Ok((0..grid.n_active())
        .into_par_iter()
        .map(|a| (0..3).fold(T::zero(), |acc, ax| acc + d2(grid, a, ax, |b| q[b])))
        .collect())
}

pub fn laplacian_vector<T: Real>(grid: &EulerianGrid<T>, u: &[Vec3<T>]) -> Result<VectorField<T>> {
    check_len(grid, u.len())?;
    Ok((0..grid.n_active())
        .into_par_iter()
        .map(|a| {
            let mut out = Vec3::zeros();
            for c in 0..3 {
                out[c] = (0..3).fold(T::zero(), |acc, ax| acc + d2(grid, a, ax, |b| u[b][c]));
            }
            out
        })
        .collect())
}
