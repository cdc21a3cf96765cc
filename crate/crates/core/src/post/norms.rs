//! Error norms against a reference field and observed convergence orders.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Real, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Largest pointwise error magnitude.
    pub l_inf: f64,
    /// `(1/N) sqrt(Σ |e|²)`.
    pub l_2: f64,
    /// Per-component maxima of `|e_c|`.
    pub l_inf_components: [f64; 3],
    /// Per-component `(1/N) sqrt(Σ e_c²)`.
    pub l_2_components: [f64; 3],
    pub samples: usize,
}

/// Norms of `numerical − exact` over paired samples.
pub fn error_norms<T: Real>(numerical: &[Vec3<T>], exact: &[Vec3<T>]) -> Result<ErrorReport> {
    if numerical.len() != exact.len() {
        return Err(Error::Shape(format!(
            "{} numerical vs {} exact samples",
            numerical.len(),
            exact.len()
        )));
    }
    if numerical.is_empty() {
        return Err(Error::Config("error norms over an empty sample set".into()));
    }
    let n = numerical.len() as f64;
    let mut l_inf = 0.0f64;
    let mut ss = 0.0f64;
    let mut ci = [0.0f64; 3];
    let mut cs = [0.0f64; 3];
    for (a, b) in numerical.iter().zip(exact) {
        let e = Vec3::new((a[0] - b[0]).as_f64(), (a[1] - b[1]).as_f64(), (a[2] - b[2]).as_f64());
        l_inf = l_inf.max(e.norm());
        ss += e.norm_squared();
        for c in 0..3 {
            ci[c] = ci[c].max(e[c].abs());
            cs[c] += e[c] * e[c];
        }
    }
    Ok(ErrorReport {
        l_inf,
        l_2: ss.sqrt() / n,
        l_inf_components: ci,
        l_2_components: cs.map(|s| s.sqrt() / n),
        samples: numerical.len(),
    })
}

/// Scalar variant of [`error_norms`].
pub fn error_norms_scalar(numerical: &[f64], exact: &[f64]) -> Result<(f64, f64)> {
    let a: Vec<Vec3<f64>> = numerical.iter().map(|&v| Vec3::new(v, 0.0, 0.0)).collect();
    let b: Vec<Vec3<f64>> = exact.iter().map(|&v| Vec3::new(v, 0.0, 0.0)).collect();
    let r = error_norms(&a, &b)?;
    Ok((r.l_inf, r.l_2))
}

/// `log(e_coarse/e_fine) / log(h_coarse/h_fine)`; `log₂` of the error ratio
/// when the spacing halves.
pub fn observed_order(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (h_coarse / h_fine).ln()
}
