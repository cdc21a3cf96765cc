use super::{dot, norm2, SolveReport, SparseOperator};
use crate::error::{Error, Result};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    /// Relative tolerance on ‖b − A x‖₂ / ‖b‖₂.
    pub tol: f64,
    pub max_iter: usize,
}

impl KrylovOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self { tol, max_iter }
    }
}

const MAX_RESTARTS: usize = 50;

fn jacobi<T: Real>(diag: &[T]) -> Vec<T> {
    diag.iter()
        .map(|&d| if d != T::zero() { T::one() / d } else { T::one() })
        .collect()
}

fn true_residual<T: Real>(apply: &impl Fn(&[T], &mut [T]), b: &[T], x: &[T]) -> Vec<T> {
    let mut ax = vec![T::zero(); b.len()];
    apply(x, &mut ax);
    b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect()
}

fn relative(res: f64, bnorm: f64) -> f64 {
    if bnorm > 0.0 {
        res / bnorm
    } else {
        res
    }
}

/// Jacobi-preconditioned conjugate gradients for symmetric positive
/// (semi)definite systems. Semidefinite systems converge when `b` lies in the
/// range of `A`.
pub fn cg_solve<T: Real>(
    a: &SparseOperator<T>,
    b: &[T],
    x0: Option<&[T]>,
    opts: KrylovOptions,
) -> Result<(Vec<T>, SolveReport)> {
    if a.n_rows() != a.n_cols() || b.len() != a.n_rows() {
        return Err(Error::Shape(format!(
            "cg: {}x{} matrix with rhs of length {}",
            a.n_rows(),
            a.n_cols(),
            b.len()
        )));
    }
    if !a.is_symmetric() {
        return Err(Error::Shape("cg requires a matrix flagged symmetric".into()));
    }
    let apply = |x: &[T], y: &mut [T]| a.matvec(x, y);
    cg_core(&apply, &apply, &a.diagonal(), b, x0, opts)
}

/// CG driven by `recur` (the operator used inside the recurrence) while
/// convergence is judged with `verify`. Both are the same matrix in normal use;
/// tests substitute a perturbed `recur` to check that a drifting recurrence is
/// caught by the recomputed residual.
pub(crate) fn cg_core<T: Real>(
    recur: &impl Fn(&[T], &mut [T]),
    verify: &impl Fn(&[T], &mut [T]),
    diag: &[T],
    b: &[T],
    x0: Option<&[T]>,
    opts: KrylovOptions,
) -> Result<(Vec<T>, SolveReport)> {
    let n = b.len();
    let minv = jacobi(diag);
    let bnorm = norm2(b).as_f64();
    let mut x = x0.map(<[T]>::to_vec).unwrap_or_else(|| vec![T::zero(); n]);
    if bnorm == 0.0 && x0.is_none() {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        ));
    }
    let target = opts.tol * bnorm.max(f64::MIN_POSITIVE);
    let mut r = true_residual(recur, b, &x);
    let mut iterations = 0usize;
    let mut restarts = 0usize;
    let mut ap = vec![T::zero(); n];
    loop {
        // (re)start: fresh search direction from the current residual
        let mut z: Vec<T> = r.iter().zip(&minv).map(|(&ri, &mi)| ri * mi).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut claimed = norm2(&r).as_f64() <= target;
        while !claimed && iterations < opts.max_iter {
            recur(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= T::zero() {
                if pap == T::zero() && norm2(&p) == T::zero() {
                    break;
                }
                return Err(Error::Breakdown {
                    solver: "cg",
                    detail: format!("pᵀAp = {pap:e} at iteration {iterations}; matrix is not positive definite"),
                });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            iterations += 1;
            if norm2(&r).as_f64() <= target {
                claimed = true;
                break;
            }
            for i in 0..n {
                z[i] = r[i] * minv[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let rt = true_residual(verify, b, &x);
        let res = norm2(&rt).as_f64();
        let report = SolveReport {
            iterations,
            relative_residual: relative(res, bnorm),
            converged: res <= target,
        };
        if report.converged {
            return Ok((x, report));
        }
        restarts += 1;
        if iterations >= opts.max_iter || !claimed || restarts > MAX_RESTARTS {
            return Err(Error::NotConverged { solver: "cg", report });
        }
        // recurrence drifted from the true residual: restart from it
        r = rt;
    }
}

/// Jacobi-preconditioned BiCGSTAB for nonsymmetric systems.
pub fn bicgstab_solve<T: Real>(
    a: &SparseOperator<T>,
    b: &[T],
    x0: Option<&[T]>,
    opts: KrylovOptions,
) -> Result<(Vec<T>, SolveReport)> {
    if a.n_rows() != a.n_cols() || b.len() != a.n_rows() {
        return Err(Error::Shape(format!(
            "bicgstab: {}x{} matrix with rhs of length {}",
            a.n_rows(),
            a.n_cols(),
            b.len()
        )));
    }
    let n = b.len();
    let minv = jacobi(&a.diagonal());
    let apply = |x: &[T], y: &mut [T]| a.matvec(x, y);
    let bnorm = norm2(b).as_f64();
    let mut x = x0.map(<[T]>::to_vec).unwrap_or_else(|| vec![T::zero(); n]);
    let target = opts.tol * bnorm.max(f64::MIN_POSITIVE);
    let mut r = true_residual(&apply, b, &x);
    if bnorm == 0.0 && norm2(&r) == T::zero() {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        ));
    }
    let mut iterations = 0usize;
    let mut v = vec![T::zero(); n];
    let mut t = vec![T::zero(); n];
    let mut phat = vec![T::zero(); n];
    let mut shat = vec![T::zero(); n];
    let mut restarts = 0usize;
    'outer: while iterations < opts.max_iter && norm2(&r).as_f64() > target {
        let r0 = r.clone();
        let mut rho = T::one();
        let mut alpha = T::one();
        let mut omega = T::one();
        let mut p = vec![T::zero(); n];
        v.iter_mut().for_each(|vi| *vi = T::zero());
        while iterations < opts.max_iter {
            let rho_new = dot(&r0, &r);
            if rho_new == T::zero() || omega == T::zero() {
                restarts += 1;
                if restarts > 20 {
                    break 'outer;
                }
                r = true_residual(&apply, b, &x);
                continue 'outer;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
                phat[i] = p[i] * minv[i];
            }
            apply(&phat, &mut v);
            let r0v = dot(&r0, &v);
            if r0v == T::zero() {
                restarts += 1;
                if restarts > 20 {
                    break 'outer;
                }
                r = true_residual(&apply, b, &x);
                continue 'outer;
            }
            alpha = rho / r0v;
            for i in 0..n {
                x[i] += alpha * phat[i];
                r[i] -= alpha * v[i];
            }
            iterations += 1;
            if norm2(&r).as_f64() <= target {
                break 'outer;
            }
            for i in 0..n {
                shat[i] = r[i] * minv[i];
            }
            apply(&shat, &mut t);
            let tt = dot(&t, &t);
            omega = if tt > T::zero() { dot(&t, &r) / tt } else { T::zero() };
            for i in 0..n {
                x[i] += omega * shat[i];
                r[i] -= omega * t[i];
            }
            if norm2(&r).as_f64() <= target {
                break 'outer;
            }
        }
    }
    let rt = true_residual(&apply, b, &x);
    let res = norm2(&rt).as_f64();
    let report = SolveReport {
        iterations,
        relative_residual: relative(res, bnorm),
        converged: res <= target,
    };
    if report.converged {
        Ok((x, report))
    } else {
        Err(Error::NotConverged {
            solver: "bicgstab",
            report,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplacian_1d(n: usize) -> SparseOperator<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        SparseOperator::from_triplets(n, n, t, true).unwrap()
    }

    /// Thomas algorithm for the [-1, 2, -1] tridiagonal system.
    fn thomas(n: usize, rhs: &[f64]) -> Vec<f64> {
        let (a, b, c) = (-1.0, 2.0, -1.0);
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        cp[0] = c / b;
        dp[0] = rhs[0] / b;
        for i in 1..n {
            let m = b - a * cp[i - 1];
            cp[i] = c / m;
            dp[i] = (rhs[i] - a * dp[i - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = dp[i] - cp[i] * x[i + 1];
        }
        x
    }

    #[test]
    fn cg_identity_in_one_iteration() {
        let a = SparseOperator::<f64>::identity(5);
        let b = [1.0, -2.0, 3.0, 0.5, 7.0];
        let (x, rep) = cg_solve(&a, &b, None, KrylovOptions::new(1e-14, 10)).unwrap();
        assert_eq!(rep.iterations, 1);
        assert_eq!(x, b.to_vec());
    }

    #[test]
    fn cg_matches_tridiagonal_direct_solve() {
        let n = 10;
        let a = laplacian_1d(n);
        let mut b = vec![0.0; n];
        b[0] = 1.0;
        let (x, rep) = cg_solve(&a, &b, None, KrylovOptions::new(1e-14, 100)).unwrap();
        assert!(rep.converged);
        let exact = thomas(n, &b);
        for (xi, ei) in x.iter().zip(&exact) {
            assert!((xi - ei).abs() < 1e-12, "{xi} vs {ei}");
        }
    }

    #[test]
    fn cg_reports_indefinite_matrix() {
        let a = SparseOperator::<f64>::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, -1.0)], true).unwrap();
        let err = cg_solve(&a, &[0.0, 1.0], None, KrylovOptions::new(1e-12, 10)).unwrap_err();
        assert!(matches!(err, Error::Breakdown { .. }), "{err}");
    }

    #[test]
    fn cg_detects_drifting_recurrence() {
        let a = laplacian_1d(12);
        let b: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let verify = |x: &[f64], y: &mut [f64]| a.matvec(x, y);
        // a recurrence on 0.4·A "converges" to the wrong answer every pass
        let recur = |x: &[f64], y: &mut [f64]| {
            a.matvec(x, y);
            y.iter_mut().for_each(|v| *v *= 0.4);
        };
        let err = cg_core(
            &recur,
            &verify,
            &a.diagonal(),
            &b,
            None,
            KrylovOptions::new(1e-10, 2000),
        )
        .unwrap_err();
        match err {
            Error::NotConverged { report, .. } => {
                assert!(!report.converged);
                assert!(report.relative_residual > 1e-4, "{report}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn mild_drift_is_corrected_by_restarts() {
        let a = laplacian_1d(12);
        let b: Vec<f64> = (0..12).map(|i| (i as f64).cos()).collect();
        let verify = |x: &[f64], y: &mut [f64]| a.matvec(x, y);
        let recur = |x: &[f64], y: &mut [f64]| {
            a.matvec(x, y);
            y.iter_mut().for_each(|v| *v *= 1.01);
        };
        let (x, rep) = cg_core(
            &recur,
            &verify,
            &a.diagonal(),
            &b,
            None,
            KrylovOptions::new(1e-10, 2000),
        )
        .unwrap();
        let ax = a.mul_vec(&x);
        let res: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((rep.relative_residual - res / bn).abs() < 1e-16);
        assert!(rep.relative_residual <= 1e-10);
        assert!(rep.iterations > 12, "restarts should add iterations: {rep}");
    }

    #[test]
    fn bicgstab_diagonal_is_exact_quickly() {
        let a =
            SparseOperator::<f64>::from_triplets(3, 3, vec![(0, 0, 2.0), (1, 1, 4.0), (2, 2, -5.0)], false).unwrap();
        let (x, rep) = bicgstab_solve(&a, &[2.0, 2.0, 10.0], None, KrylovOptions::new(1e-14, 10)).unwrap();
        assert!(rep.iterations <= 2);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 0.5).abs() < 1e-15 && (x[2] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn bicgstab_matches_dense_lu() {
        let n = 40;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut t = Vec::new();
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let mut off = 0.0;
            for _ in 0..5 {
                let j = rng.random_range(0..n);
                if j != i {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    t.push((i, j, v));
                    dense[(i, j)] += v;
                    off += v.abs();
                }
            }
            let d = off + 1.0 + rng.random_range(0.0..1.0);
            t.push((i, i, d));
            dense[(i, i)] += d;
        }
        let a = SparseOperator::from_triplets(n, n, t, false).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (x, _) = bicgstab_solve(&a, &b, None, KrylovOptions::new(1e-14, 500)).unwrap();
        let exact = dense.lu().solve(&DVector::from_vec(b)).unwrap();
        for i in 0..n {
            assert!((x[i] - exact[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn bicgstab_reports_singular_system() {
        let a =
            SparseOperator::<f64>::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)], false)
                .unwrap();
        let err = bicgstab_solve(&a, &[1.0, 2.0], None, KrylovOptions::new(1e-12, 50)).unwrap_err();
        assert!(matches!(err, Error::NotConverged { .. }), "{err}");
    }
}
