use std::collections::VecDeque;

use super::SparseOperator;
use crate::error::{Error, Result};
use crate::Real;

/// Sparse Cholesky factor stored in variable-band (skyline) form after a
/// reverse Cuthill–McKee reordering.
///
/// Intended for symmetric positive definite operators that stay fixed over a
/// whole run, so the factorization cost is paid once.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky<T> {
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// first stored column of each (permuted) row
    first: Vec<usize>,
    /// offset of row i's segment `[first[i], i]` in `vals`
    start: Vec<usize>,
    vals: Vec<T>,
}

/// Reverse Cuthill–McKee ordering of the symmetric pattern of `a`, one
/// connected component at a time. Returns `perm[new] = old`.
pub fn reverse_cuthill_mckee<T: Real>(a: &SparseOperator<T>) -> Vec<usize> {
    let n = a.n_rows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs = |root: usize, mark: &mut Vec<bool>, out: &mut Vec<usize>| -> usize {
        // returns the last node reached (a far node)
        let mut q = VecDeque::from([root]);
        mark[root] = true;
        let mut last = root;
        while let Some(v) = q.pop_front() {
            out.push(v);
            last = v;
            let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&w| !mark[w]).collect();
            nb.sort_by_key(|&w| (degree[w], w));
            for w in nb {
                mark[w] = true;
                q.push_back(w);
            }
        }
        last
    };
    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_by_key(|&v| (degree[v], v));
    for s in seeds {
        if visited[s] {
            continue;
        }
        // a few sweeps towards a pseudo-peripheral start node
        let mut root = s;
        for _ in 0..3 {
            let mut mark = visited.clone();
            let mut tmp = Vec::new();
            let far = bfs(root, &mut mark, &mut tmp);
            if far == root {
                break;
            }
            root = far;
        }
        let before = order.len();
        bfs(root, &mut visited, &mut order);
        order[before..].reverse();
    }
    order
}

impl<T: Real> EnvelopeCholesky<T> {
    /// Reorders and factors `a`, which must be square, flagged symmetric and
    /// positive definite.
    pub fn new(a: &SparseOperator<T>) -> Result<Self> {
        let n = a.n_rows();
        if a.n_cols() != n {
            return Err(Error::Shape(format!(
                "envelope Cholesky of a {}x{} matrix",
                n,
                a.n_cols()
            )));
        }
        if !a.is_symmetric() {
            return Err(Error::Shape(
                "envelope Cholesky requires a matrix flagged symmetric".into(),
            ));
        }
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..n {
            let i = inv[old];
            for (j_old, _) in a.row(old) {
                let j = inv[j_old];
                if j < first[i] {
                    first[i] = j;
                }
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut vals = vec![T::zero(); start[n]];
        for old in 0..n {
            let i = inv[old];
            for (j_old, v) in a.row(old) {
                let j = inv[j_old];
                if j <= i {
                    vals[start[i] + j - first[i]] = v;
                }
            }
        }
        let mut f = Self {
            perm,
            first,
            start,
            vals,
        };
        f.factor()?;
        Ok(f)
    }

    fn factor(&mut self) -> Result<()> {
        let n = self.first.len();
        for i in 0..n {
            let fi = self.first[i];
            let si = self.start[i];
            for j in fi..i {
                let fj = self.first[j];
                let sj = self.start[j];
                let k0 = fi.max(fj);
                let mut acc = self.vals[si + j - fi];
                for k in k0..j {
                    acc -= self.vals[si + k - fi] * self.vals[sj + k - fj];
                }
                let ljj = self.vals[sj + j - fj];
                self.vals[si + j - fi] = acc / ljj;
            }
            let mut d = self.vals[si + i - fi];
            for k in fi..i {
                let l = self.vals[si + k - fi];
                d -= l * l;
            }
            if !(d > T::zero()) {
                return Err(Error::Breakdown {
                    solver: "envelope cholesky",
                    detail: format!(
                        "non-positive pivot {d:e} at row {}; matrix is not positive definite",
                        self.perm[i]
                    ),
                });
            }
            self.vals[si + i - fi] = d.sqrt();
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.vals.len()
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n, "envelope solve rhs length");
        let mut y: Vec<T> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let si = self.start[i];
            let mut acc = y[i];
            for k in fi..i {
                acc -= self.vals[si + k - fi] * y[k];
            }
            y[i] = acc / self.vals[si + i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let si = self.start[i];
            let xi = y[i] / self.vals[si + i - fi];
            y[i] = xi;
            for k in fi..i {
                y[k] -= self.vals[si + k - fi] * xi;
            }
        }
        let mut x = vec![T::zero(); n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
