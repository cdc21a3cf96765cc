//! Solver for the pressure-increment system `S Φ = b` with detection of the
//! constant modes left by pure-Neumann parity classes.

use super::operators::FvOperators;
use crate::error::{Error, Result};
use crate::linsolve::{cg_solve, EnvelopeCholesky, KrylovOptions, SolveReport, SparseOperator};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoissonMethod {
    /// Envelope Cholesky factored once per run.
    Direct,
    /// Jacobi-preconditioned conjugate gradients.
    Cg,
}

/// Largest envelope (stored factor entries) accepted for the direct method
/// before falling back to CG.
pub const ENVELOPE_CAP: usize = 400_000_000;

#[derive(Debug, Clone)]
struct Component {
    members: Vec<usize>,
    /// Pinned row when the class has no Dirichlet anchor.
    pinned: Option<usize>,
    /// Single row with an empty operator row: a prescribed-velocity cell with
    /// no unknown neighbour, whose divergence is fixed by data.
    trivial: bool,
}

#[derive(Debug, Clone)]
enum Backend<T> {
    Direct(EnvelopeCholesky<T>),
    Cg,
}

/// Factored or iterative pressure-increment solver.
#[derive(Debug, Clone)]
pub struct PoissonSolver<T: Real> {
    /// Unmodified operator, used for residuals.
    s: SparseOperator<T>,
    /// Operator with pinned rows and columns replaced by their diagonal.
    pinned: SparseOperator<T>,
    comps: Vec<Component>,
    backend: Backend<T>,
    opts: KrylovOptions,
}

fn components<T: Real>(s: &SparseOperator<T>) -> Vec<Vec<usize>> {
    let n = s.n_rows();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut members = Vec::new();
        while let Some(i) = stack.pop() {
            members.push(i);
            for (j, _) in s.row(i) {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out.sort_unstable_by_key(|m| m[0]);
    out
}

impl<T: Real> PoissonSolver<T> {
    pub fn new(ops: &FvOperators<T>, method: PoissonMethod, opts: KrylovOptions) -> Result<Self> {
        let s = ops.poisson_matrix()?;
        let n = s.n_rows();
        if n == 0 {
            return Err(Error::Config(
                "no pressure rows: the active region has no unknowns".into(),
            ));
        }
        let diag = s.diagonal();
        let mut comps = Vec::new();
        let mut pinned_rows = Vec::new();
        for members in components(&s) {
            // a class without anchor has S·1 = 0 on its rows
            let mut one = vec![T::zero(); n];
            for &i in &members {
                one[i] = T::one();
            }
            let s1 = s.mul_vec(&one);
            let scale = members.iter().fold(0.0f64, |m, &i| m.max(diag[i].as_f64().abs()));
            let leak = members.iter().fold(0.0f64, |m, &i| m.max(s1[i].as_f64().abs()));
            let pinned = if leak <= 1e-10 * scale { Some(members[0]) } else { None };
            if let Some(p) = pinned {
                pinned_rows.push(p);
            }
            let trivial = members.len() == 1 && diag[members[0]] == T::zero();
            comps.push(Component {
                members,
                pinned,
                trivial,
            });
        }
        let n_free = comps.iter().filter(|c| c.pinned.is_some() && !c.trivial).count();
        if n_free > 0 {
            log::info!(
                "pressure system: {} of {} classes have no pressure anchor; one node pinned in each",
                n_free,
                comps.len()
            );
        }
        let mut is_pinned = vec![false; n];
        for &p in &pinned_rows {
            is_pinned[p] = true;
        }
        let mut trip = Vec::with_capacity(s.nnz());
        for i in 0..n {
            for (j, v) in s.row(i) {
                if (is_pinned[i] || is_pinned[j]) && i != j {
                    continue;
                }
                trip.push((i, j, v));
            }
            if is_pinned[i] && diag[i] == T::zero() {
                trip.push((i, i, T::one()));
            }
        }
        let pinned = SparseOperator::from_triplets(n, n, trip, true)?;
        let backend = match method {
            PoissonMethod::Cg => Backend::Cg,
            PoissonMethod::Direct => {
                let est = estimate_envelope(&pinned);
                if est > ENVELOPE_CAP {
                    log::warn!("pressure envelope of {est} entries exceeds the cap; using CG");
                    Backend::Cg
                } else {
                    let f = EnvelopeCholesky::new(&pinned)?;
                    log::debug!("pressure factor: {} rows, envelope {}", f.dim(), f.envelope_size());
                    Backend::Direct(f)
                }
            }
        };
        Ok(Self {
            s,
            pinned,
            comps,
            backend,
            opts,
        })
    }

    pub fn operator(&self) -> &SparseOperator<T> {
        &self.s
    }

    /// Classes without a pressure anchor, excluding isolated empty rows.
    pub fn n_unanchored(&self) -> usize {
        self.comps.iter().filter(|c| c.pinned.is_some() && !c.trivial).count()
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.backend, Backend::Direct(_))
    }

    /// Solves `S Φ = b`. For classes without anchor the component of `b`
    /// along the class indicator is removed first; if no class is anchored
    /// and `b` has a significant mean the system is incompatible and an
    /// error is returned.
    pub fn solve(&self, b: &[T]) -> Result<(Vec<T>, SolveReport)> {
        let n = self.s.n_rows();
        if b.len() != n {
            return Err(Error::Shape(format!("poisson rhs of length {} for {n} rows", b.len())));
        }
        let mut rhs = b.to_vec();
        if self.comps.iter().all(|c| c.pinned.is_some()) && self.n_unanchored() > 0 {
            let sum: f64 = b.iter().map(|v| v.as_f64()).sum();
            let mag: f64 = b.iter().map(|v| v.as_f64().abs()).sum();
            if mag > 0.0 && sum.abs() > 1e-8 * mag {
                return Err(Error::Singular(format!(
                    "pressure source has nonzero mean ({:.3e} relative) but no pressure boundary anchors it",
                    sum / mag
                )));
            }
        }
        for c in &self.comps {
            if c.pinned.is_some() {
                let mean = c.members.iter().fold(T::zero(), |s, &i| s + rhs[i]) / T::from_usize_lossy(c.members.len());
                for &i in &c.members {
                    rhs[i] -= mean;
                }
            }
        }
        // the projected source is what the full operator must reproduce
        let proj = rhs.clone();
        for c in &self.comps {
            if let Some(p) = c.pinned {
                rhs[p] = T::zero();
            }
        }
        let (x, iterations) = match &self.backend {
            Backend::Direct(f) => (f.solve(&rhs), 1),
            Backend::Cg => {
                let (x, r) = cg_solve(&self.pinned, &rhs, None, self.opts)?;
                (x, r.iterations)
            }
        };
        let ax = self.s.mul_vec(&x);
        let rn = ax
            .iter()
            .zip(&proj)
            .fold(0.0f64, |s, (a, b)| s + (*a - *b).as_f64().powi(2))
            .sqrt();
        let bn = proj.iter().fold(0.0f64, |s, v| s + v.as_f64().powi(2)).sqrt();
        let rel = if bn > 0.0 { rn / bn } else { rn };
        let report = SolveReport {
            iterations,
            relative_residual: rel,
            converged: rel <= self.opts.tol.max(1e3 * T::EPS.as_f64()),
        };
        if !report.converged {
            return Err(Error::NotConverged {
                solver: "pressure solve",
                report,
            });
        }
        Ok((x, report))
    }
}

fn estimate_envelope<T: Real>(a: &SparseOperator<T>) -> usize {
    let perm = crate::linsolve::reverse_cuthill_mckee(a);
    let mut inv = vec![0usize; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    (0..a.n_rows())
        .map(|old| {
            let i = inv[old];
            let lo = a.row(old).map(|(j, _)| inv[j]).min().unwrap_or(i).min(i);
            i - lo + 1
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::super::bc::{classify, BoundaryConditionSet, Face, Patch, PatchKind, Region, TimeSeries};
    use super::*;
    use crate::grid::{BoxDomain, EulerianGrid};
    use crate::Vec3;

    fn setup(pressure: bool, h: f64) -> (EulerianGrid<f64>, FvOperators<f64>) {
        let g = EulerianGrid::build(BoxDomain::new(Vec3::zeros(), Vec3::new(1.0, 0.4, 0.4)).unwrap(), h).unwrap();
        let patches = if pressure {
            vec![
                Patch {
                    face: Face::XMin,
                    region: Region::Whole,
                    kind: PatchKind::Pressure {
                        value_pa: TimeSeries::Constant(0.0),
                    },
                },
                Patch {
                    face: Face::XMax,
                    region: Region::Whole,
                    kind: PatchKind::Pressure {
                        value_pa: TimeSeries::Constant(0.0),
                    },
                },
            ]
        } else {
            vec![]
        };
        let c = classify(&g, &BoundaryConditionSet { patches }).unwrap();
        let ops = FvOperators::new(&g, &c).unwrap();
        (g, ops)
    }

    fn opts() -> KrylovOptions {
        KrylovOptions::new(1e-10, 10_000)
    }

    #[test]
    fn anchored_system_is_definite_and_methods_agree() {
        let (_, ops) = setup(true, 0.1);
        let direct = PoissonSolver::new(&ops, PoissonMethod::Direct, opts()).unwrap();
        assert_eq!(direct.n_unanchored(), 0);
        let cg = PoissonSolver::new(&ops, PoissonMethod::Cg, opts()).unwrap();
        let b: Vec<f64> = (0..ops.n_rows()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let (x1, r1) = direct.solve(&b).unwrap();
        let (x2, _) = cg.solve(&b).unwrap();
        assert!(r1.relative_residual < 1e-10);
        let scale = x1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, c) in x1.iter().zip(&x2) {
            assert!((a - c).abs() < 1e-7 * scale);
        }
    }

    #[test]
    fn closed_box_pins_every_parity_class() {
        let (_, ops) = setup(false, 0.1);
        let s = PoissonSolver::new(&ops, PoissonMethod::Direct, opts()).unwrap();
        assert_eq!(s.n_unanchored(), 8);
        let zero = vec![0.0; ops.n_rows()];
        let (x, _) = s.solve(&zero).unwrap();
        assert!(x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn nonzero_mean_source_without_anchor_is_rejected() {
        let (_, ops) = setup(false, 0.1);
        let s = PoissonSolver::new(&ops, PoissonMethod::Direct, opts()).unwrap();
        let b = vec![1.0; ops.n_rows()];
        assert!(matches!(s.solve(&b), Err(Error::Singular(_))));
    }

    #[test]
    fn zero_source_gives_zero_increment() {
        let (_, ops) = setup(true, 0.1);
        let s = PoissonSolver::new(&ops, PoissonMethod::Direct, opts()).unwrap();
        let (x, _) = s.solve(&vec![0.0; ops.n_rows()]).unwrap();
        assert!(x.iter().all(|v| *v == 0.0));
    }
}
