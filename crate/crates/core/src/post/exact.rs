//! Analytic Poiseuille reference solution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{lit, Real, Vec3};

/// Axial velocity `U_max (1 − (r/R)²)` with `U_max = −R²/(4μ) dp/dz`.
pub fn poiseuille_exact(r: f64, radius: f64, mu: f64, dpdz: f64) -> Result<f64> {
    if !(radius > 0.0 && mu > 0.0) {
        return Err(Error::Config(
            "Poiseuille solution needs positive radius and viscosity".into(),
        ));
    }
    if !(r >= 0.0) || r > radius * (1.0 + 1e-12) {
        return Err(Error::Config(format!("radius {r} outside the tube of radius {radius}")));
    }
    let u_max = -radius * radius / (4.0 * mu) * dpdz;
    Ok(u_max * (1.0 - (r / radius).powi(2)))
}

/// Fully developed flow in a straight circular tube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoiseuilleTube {
    /// A point on the tube axis.
    pub axis_point_m: [f64; 3],
    /// Axis direction; normalised on use.
    pub axis_direction: [f64; 3],
    pub radius_m: f64,
    pub viscosity_pa_s: f64,
    /// Pressure gradient along the axis direction (negative for flow along it).
    pub pressure_gradient_pa_per_m: f64,
}

impl PoiseuilleTube {
    pub fn u_max(&self) -> f64 {
        -self.radius_m * self.radius_m / (4.0 * self.viscosity_pa_s) * self.pressure_gradient_pa_per_m
    }

    fn frame(&self) -> (Vec3<f64>, Vec3<f64>) {
        let p = Vec3::from(self.axis_point_m);
        let d = Vec3::from(self.axis_direction).normalize();
        (p, d)
    }

    /// Distance of `x` from the axis.
    pub fn radial_distance<T: Real>(&self, x: &Vec3<T>) -> f64 {
        let (p, d) = self.frame();
        let v = Vec3::new(x[0].as_f64(), x[1].as_f64(), x[2].as_f64()) - p;
        (v - d * v.dot(&d)).norm()
    }

    pub fn contains<T: Real>(&self, x: &Vec3<T>) -> bool {
        self.radial_distance(x) < self.radius_m
    }

    /// Exact velocity at `x`; zero outside the tube.
    pub fn velocity<T: Real>(&self, x: &Vec3<T>) -> Vec3<T> {
        let r = self.radial_distance(x);
        if r >= self.radius_m {
            return Vec3::zeros();
        }
        let (_, d) = self.frame();
        let u = poiseuille_exact(r, self.radius_m, self.viscosity_pa_s, self.pressure_gradient_pa_per_m)
            .expect("inside the tube");
        Vec3::new(lit(d[0] * u), lit(d[1] * u), lit(d[2] * u))
    }

    /// Wall shear stress magnitude `|dp/dz| R / 2`.
    pub fn wall_shear_stress(&self) -> f64 {
        self.pressure_gradient_pa_per_m.abs() * self.radius_m / 2.0
    }
}
