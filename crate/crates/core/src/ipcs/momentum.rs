//! Semi-implicit momentum operator `I + Δt (uⁿ·∇) − Δt ν ∇²` on the
//! unknown-velocity nodes, shared by the three components.

use serde::{Deserialize, Serialize};

use super::bc::NodeClass;
use super::operators::FvOperators;
use crate::error::Result;
use crate::linsolve::SparseOperator;
use crate::{lit, Real, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Advection {
    /// Second-order central differences.
    #[default]
    Central,
    /// First-order upwind, for robustness at higher Reynolds number.
    Upwind,
}

/// Momentum matrix with the couplings to prescribed-velocity nodes that move
/// to the right-hand side.
#[derive(Debug, Clone)]
pub struct MomentumSystem<T: Real> {
    pub matrix: SparseOperator<T>,
    /// `(row, node, coefficient)` for neighbours whose velocity is prescribed.
    pub boundary: Vec<(usize, usize, T)>,
}

/// Numbering of the unknown-velocity nodes.
#[derive(Debug, Clone)]
pub struct UnknownIndex {
    pub nodes: Vec<usize>,
    pub index: Vec<Option<usize>>,
}

impl UnknownIndex {
    pub fn new<T: Real>(ops: &FvOperators<T>) -> Self {
        let mut nodes = Vec::new();
        let mut index = vec![None; ops.n_nodes()];
        for a in 0..ops.n_nodes() {
            if ops.is_unknown(a) {
                index[a] = Some(nodes.len());
                nodes.push(a);
            }
        }
        Self { nodes, index }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Assembles the operator for advecting velocity `u_n`. Diffusion uses the
/// compact seven-point Laplacian; at pressure nodes the normal direction uses
/// a mirrored ghost (zero normal derivative) and carries no advection.
pub fn assemble_momentum<T: Real>(
    ops: &FvOperators<T>,
    idx: &UnknownIndex,
    u_n: &[Vec3<T>],
    nu: T,
    dt: T,
    advection: Advection,
) -> Result<MomentumSystem<T>> {
    let h = ops.h();
    let diff = dt * nu / (h * h);
    let two = lit::<T>(2.0);
    let mut trip = Vec::with_capacity(idx.len() * 7);
    let mut boundary = Vec::new();
    for (row, &a) in idx.nodes.iter().enumerate() {
        let mut diag = T::one();
        let mut push = |n: usize, c: T, trip: &mut Vec<(usize, usize, T)>| match idx.index[n] {
            Some(col) => trip.push((row, col, c)),
            None => boundary.push((row, n, c)),
        };
        for ax in 0..3 {
            let lo = ops.neighbor(a, ax, 0);
            let hi = ops.neighbor(a, ax, 1);
            let normal = matches!(ops.class(a), NodeClass::Pressure { axis, .. } if axis as usize == ax);
            if normal {
                let inner = lo.or(hi).expect("pressure node has an inward neighbour");
                diag += two * diff;
                push(inner, -two * diff, &mut trip);
                continue;
            }
            let (lo, hi) = (
                lo.expect("unknown node has both neighbours"),
                hi.expect("unknown node has both neighbours"),
            );
            diag += two * diff;
            push(lo, -diff, &mut trip);
            push(hi, -diff, &mut trip);
            let v = u_n[a][ax] * dt / h;
            match advection {
                Advection::Central => {
                    let c = v * lit(0.5);
                    push(hi, c, &mut trip);
                    push(lo, -c, &mut trip);
                }
                Advection::Upwind => {
                    if v > T::zero() {
                        diag += v;
                        push(lo, -v, &mut trip);
                    } else if v < T::zero() {
                        diag -= v;
                        push(hi, v, &mut trip);
                    }
                }
            }
        }
        trip.push((row, row, diag));
    }
    let matrix = SparseOperator::from_triplets(idx.len(), idx.len(), trip, false)?;
    Ok(MomentumSystem { matrix, boundary })
}

#[cfg(test)]
mod tests {
    use super::super::bc::{classify, BoundaryConditionSet};
    use super::*;
    use crate::grid::{BoxDomain, EulerianGrid};

    #[test]
    fn rows_of_pure_diffusion_sum_to_one() {
        let g = EulerianGrid::build(BoxDomain::new(Vec3::zeros(), Vec3::new(0.6, 0.5, 0.4)).unwrap(), 0.1).unwrap();
        let c = classify(&g, &BoundaryConditionSet::default()).unwrap();
        let ops = FvOperators::new(&g, &c).unwrap();
        let idx = UnknownIndex::new(&ops);
        let sys = assemble_momentum(&ops, &idx, &g.zeros_vector(), 0.3, 0.01, Advection::Central).unwrap();
        let mut sums = vec![0.0f64; idx.len()];
        for i in 0..idx.len() {
            sums[i] = sys.matrix.row(i).map(|(_, v)| v).sum();
        }
        for &(r, _, v) in &sys.boundary {
            sums[r] += v;
        }
        assert!(sums.iter().all(|s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn upwind_is_an_m_matrix() {
        let g = EulerianGrid::build(BoxDomain::new(Vec3::zeros(), Vec3::new(0.6, 0.5, 0.4)).unwrap(), 0.1).unwrap();
        let c = classify(&g, &BoundaryConditionSet::default()).unwrap();
        let ops = FvOperators::new(&g, &c).unwrap();
        let idx = UnknownIndex::new(&ops);
        let u = g.sample_vector(|x| Vec3::new(x[1] - 0.25, 0.5 - x[0], 0.3));
        let sys = assemble_momentum(&ops, &idx, &u, 1e-4, 0.05, Advection::Upwind).unwrap();
        for i in 0..idx.len() {
            let mut off = 0.0f64;
            let mut d = 0.0f64;
            for (j, v) in sys.matrix.row(i) {
                if j == i {
                    d = v;
                } else {
                    assert!(v <= 0.0);
                    off += v.abs();
                }
            }
            assert!(d >= off);
        }
    }
}
