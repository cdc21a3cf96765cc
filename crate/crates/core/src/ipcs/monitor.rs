//! Steady-state monitor: normalised change of each velocity component
//! between successive steps.

use serde::{Deserialize, Serialize};

use crate::{Real, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorKind {
    /// `sqrt(Σ d² / N²) / (max − min)`, with N² under the root.
    #[default]
    Verbatim,
    /// `sqrt(Σ d² / N) / (max − min)`.
    Rms,
}

/// Relative size below which a component's range counts as roundoff.
pub const RANGE_FLOOR: f64 = 1e-12;

/// Normalised change per component over all `N` nodes, scaled by the range of
/// `u_prev`. A component whose previous values are all equal reports 0; so
/// does one whose range is below [`RANGE_FLOOR`] times the largest velocity
/// magnitude, since its values are roundoff.
pub fn steady_monitor<T: Real>(u_prev: &[Vec3<T>], u_next: &[Vec3<T>], kind: MonitorKind) -> [f64; 3] {
    assert_eq!(u_prev.len(), u_next.len(), "monitor field lengths");
    let n = u_prev.len() as f64;
    let mut out = [0.0; 3];
    if u_prev.is_empty() {
        return out;
    }
    let scale = u_prev.iter().fold(0.0f64, |m, v| m.max(v.amax().as_f64()));
    for (c, o) in out.iter_mut().enumerate() {
        let (mut lo, mut hi, mut ss) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        for (a, b) in u_prev.iter().zip(u_next) {
            let v = a[c].as_f64();
            lo = lo.min(v);
            hi = hi.max(v);
            ss += (b[c].as_f64() - v).powi(2);
        }
        let range = hi - lo;
        if range <= 0.0 || range <= RANGE_FLOOR * scale {
            log::trace!("monitor component {c}: constant field, reported as 0");
            continue;
        }
        let denom = match kind {
            MonitorKind::Verbatim => n * n,
            MonitorKind::Rms => n,
        };
        *o = (ss / denom).sqrt() / range;
    }
    out
}
