use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};
use crate::Real;

/// Largest dense system accepted without an explicit override.
pub const DEFAULT_DENSE_CAP: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenseFactorKind {
    Cholesky,
    Lu,
}

#[derive(Debug, Clone)]
enum Inner<T: Real> {
    Chol(Cholesky<T, Dyn>),
    Lu(LU<T, Dyn, Dyn>),
}

/// A dense factorization computed once and reused for many right-hand sides.
#[derive(Debug, Clone)]
pub struct DenseFactor<T: Real> {
    inner: Inner<T>,
    n: usize,
    pivot_ratio: f64,
}

fn is_symmetric<T: Real>(a: &DMatrix<T>) -> bool {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.as_f64().abs()));
    let tol = 1e3 * T::EPS.as_f64() * scale;
    let n = a.nrows();
    (0..n).all(|i| (0..i).all(|j| (a[(i, j)] - a[(j, i)]).as_f64().abs() <= tol))
}

impl<T: Real> DenseFactor<T> {
    /// Factors `a`, choosing Cholesky when it is symmetric positive definite
    /// and partially pivoted LU otherwise.
    ///
    /// Fails with [`Error::Config`] when `a` is larger than `cap` and with
    /// [`Error::Singular`] when the smallest pivot is negligible relative to
    /// the largest.
    pub fn new(a: DMatrix<T>, cap: usize) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Shape(format!("dense factor of a {}x{} matrix", n, a.ncols())));
        }
        if n == 0 {
            return Err(Error::Shape("dense factor of an empty matrix".into()));
        }
        if n > cap {
            return Err(Error::Config(format!(
                "dense system of size {n} exceeds the cap of {cap}; resample the surface more coarsely"
            )));
        }
        let threshold = 64.0 * n as f64 * T::EPS.as_f64();
        if is_symmetric(&a) {
            if let Some(chol) = Cholesky::new(a.clone()) {
                let l = chol.l_dirty();
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for i in 0..n {
                    let d = l[(i, i)].as_f64().powi(2);
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
                let ratio = lo / hi;
                if ratio > threshold {
                    return Ok(Self {
                        inner: Inner::Chol(chol),
                        n,
                        pivot_ratio: ratio,
                    });
                }
            }
        }
        let lu = a.lu();
        let u = lu.u();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let d = u[(i, i)].as_f64().abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
        if !(ratio > threshold) {
            return Err(Error::Singular(format!(
                "dense {n}x{n} factorization has pivot ratio {ratio:.3e}"
            )));
        }
        Ok(Self {
            inner: Inner::Lu(lu),
            n,
            pivot_ratio: ratio,
        })
    }

    pub fn kind(&self) -> DenseFactorKind {
        match self.inner {
            Inner::Chol(_) => DenseFactorKind::Cholesky,
            Inner::Lu(_) => DenseFactorKind::Lu,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Smallest over largest pivot magnitude; a cheap conditioning indicator.
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n, "dense solve rhs length");
        let mut x = DVector::from_column_slice(b);
        match &self.inner {
            Inner::Chol(c) => c.solve_mut(&mut x),
            Inner::Lu(l) => {
                l.solve_mut(&mut x);
            }
        }
        x.as_slice().to_vec()
    }

    pub fn solve_matrix(&self, b: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(b.nrows(), self.n, "dense solve rhs rows");
        let mut x = b.clone();
        match &self.inner {
            Inner::Chol(c) => c.solve_mut(&mut x),
            Inner::Lu(l) => {
                l.solve_mut(&mut x);
            }
        }
        x
    }
}

/// ‖A x − b‖∞ / ‖b‖∞ (or the absolute residual when b = 0).
pub fn dense_relative_residual<T: Real>(a: &DMatrix<T>, x: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    let r = a * x - b;
    let rn = r.iter().fold(0.0f64, |m, v| m.max(v.as_f64().abs()));
    let bn = b.iter().fold(0.0f64, |m, v| m.max(v.as_f64().abs()));
    if bn > 0.0 {
        rn / bn
    } else {
        rn
    }
}

/// Factors `a` once and solves for every column of `b`, checking the relative
/// residual against `tol`.
pub fn dense_factor_solve<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, cap: usize, tol: f64) -> Result<DMatrix<T>> {
    let f = DenseFactor::new(a.clone(), cap)?;
    let x = f.solve_matrix(b);
    let res = dense_relative_residual(a, &x, b);
    if !(res <= tol) {
        return Err(Error::Singular(format!(
            "dense solve residual {res:.3e} exceeds {tol:.1e}"
        )));
    }
    Ok(x)
}
