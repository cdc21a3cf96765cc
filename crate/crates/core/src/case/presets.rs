//! Built-in verification cases.

use super::config::{
    CaseConfig, DomainConfig, ExactSolution, Features, GeometryConfig, LagrangianConfig, OutputConfig, ProbeLine,
};
use crate::error::{Error, Result};
use crate::ipcs::{
    Advection, BoundaryConditionSet, Face, FluidProperties, MonitorKind, Patch, PatchKind, Region, SolverOptions,
    TimeControls, TimeSeries, VelocityProfile,
};
use crate::post::PoiseuilleTube;

pub const PRESET_NAMES: [&str; 6] = [
    "poiseuille-coarse",
    "poiseuille-fine",
    "poiseuille-re1102",
    "poiseuille-full-box",
    "u-bend",
    "lid-driven",
];

/// Blood-like fluid of the verification tubes.
pub const BLOOD_DENSITY: f64 = 1050.0;
pub const BLOOD_VISCOSITY: f64 = 0.00345;

pub const TUBE_RADIUS: f64 = 0.005;
pub const TUBE_LENGTH: f64 = 0.05;
const TUBE_HALF_WIDTH: f64 = 0.006;

pub fn preset(name: &str) -> Result<CaseConfig> {
    match name {
        "poiseuille-coarse" => Ok(poiseuille(1e-3, 1.0)),
        "poiseuille-fine" => Ok(poiseuille(5e-4, 1.0)),
        "poiseuille-re1102" => Ok(poiseuille(1e-3, 2.0)),
        "poiseuille-full-box" => {
            let mut c = poiseuille(1e-3, 1.0);
            c.name = name.into();
            c.features.crop = false;
            Ok(c)
        }
        "u-bend" => Ok(u_bend(4e-4, 1e-3)),
        "lid-driven" => Ok(lid_driven()),
        other => Err(Error::Config(format!(
            "unknown preset {other:?}; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

fn disk(face: Face, center_m: [f64; 3], radius_m: f64, kind: PatchKind) -> Patch {
    Patch {
        face,
        region: Region::Disk { center_m, radius_m },
        kind,
    }
}

/// Straight tube of radius 5 mm and length 10R along x, driven by
/// `inlet_pa` at x = 0 against 0 Pa at x = L.
pub fn poiseuille(h: f64, inlet_pa: f64) -> CaseConfig {
    let name = match (h, inlet_pa) {
        (h, p) if h == 1e-3 && p == 1.0 => "poiseuille-coarse".to_string(),
        (h, p) if h == 5e-4 && p == 1.0 => "poiseuille-fine".to_string(),
        (h, p) if h == 1e-3 && p == 2.0 => "poiseuille-re1102".to_string(),
        (h, p) => format!("poiseuille-h{h:e}-p{p}"),
    };
    let w = TUBE_HALF_WIDTH;
    let pressure = |face, x: f64, v: f64| {
        disk(
            face,
            [x, 0.0, 0.0],
            TUBE_RADIUS,
            PatchKind::Pressure {
                value_pa: TimeSeries::Constant(v),
            },
        )
    };
    CaseConfig {
        name,
        domain: DomainConfig {
            min_m: [0.0, -w, -w],
            max_m: [TUBE_LENGTH, w, w],
            h_m: h,
            crop_band_cells: 3.0,
        },
        geometry: GeometryConfig::Tube {
            start_m: [0.0, 0.0, 0.0],
            end_m: [TUBE_LENGTH, 0.0, 0.0],
            radius_m: TUBE_RADIUS,
        },
        lagrangian: LagrangianConfig::default(),
        fluid: FluidProperties {
            rho: BLOOD_DENSITY,
            mu: BLOOD_VISCOSITY,
        },
        boundary: BoundaryConditionSet {
            patches: vec![
                pressure(Face::XMin, 0.0, inlet_pa),
                pressure(Face::XMax, TUBE_LENGTH, 0.0),
            ],
        },
        time: TimeControls {
            dt: 2.5e-3,
            t_end: 100.0,
            steady_tolerance: 1e-8,
            max_steps: 40_000,
        },
        solver: SolverOptions {
            momentum_tol: 1e-10,
            ..SolverOptions::default()
        },
        features: Features::default(),
        output: OutputConfig {
            log_every: 10,
            probes: vec![ProbeLine {
                name: "diameter".into(),
                start_m: [TUBE_LENGTH / 2.0, -TUBE_RADIUS, 0.0],
                end_m: [TUBE_LENGTH / 2.0, TUBE_RADIUS, 0.0],
                samples: 41,
            }],
            ..OutputConfig::default()
        },
        exact: Some(ExactSolution::Poiseuille(PoiseuilleTube {
            axis_point_m: [0.0, 0.0, 0.0],
            axis_direction: [1.0, 0.0, 0.0],
            radius_m: TUBE_RADIUS,
            viscosity_pa_s: BLOOD_VISCOSITY,
            pressure_gradient_pa_per_m: -inlet_pa / TUBE_LENGTH,
        })),
    }
}

/// U-bend inner radius, bend radius and peak inlet velocity.
pub const U_BEND_RADIUS: f64 = 0.002;
pub const U_BEND_BEND_RADIUS: f64 = 0.024;
pub const U_BEND_U_MAX: f64 = 0.122625;
pub const U_BEND_REYNOLDS: f64 = 300.0;

/// 90° bend in the box `[-6.4, 32] × [0, 38.4] × [-6.4, 6.4]` mm. The inlet
/// straight has length `inlet_ext`; the outlet straight runs to x = 32 mm.
pub fn u_bend(h: f64, inlet_ext: f64) -> CaseConfig {
    let x_max = 0.032;
    let outlet_y = inlet_ext + U_BEND_BEND_RADIUS;
    let outlet_len = x_max - U_BEND_BEND_RADIUS;
    // Re on the diameter and the mean (half peak) inlet velocity
    let mu = BLOOD_DENSITY * 0.5 * U_BEND_U_MAX * 2.0 * U_BEND_RADIUS / U_BEND_REYNOLDS;
    CaseConfig {
        name: "u-bend".into(),
        domain: DomainConfig {
            min_m: [-0.0064, 0.0, -0.0064],
            max_m: [x_max, 0.0384, 0.0064],
            h_m: h,
            crop_band_cells: 3.0,
        },
        geometry: GeometryConfig::UBend {
            origin_m: [0.0, 0.0, 0.0],
            inlet_length_m: inlet_ext,
            bend_radius_m: U_BEND_BEND_RADIUS,
            outlet_length_m: outlet_len,
            radius_m: U_BEND_RADIUS,
        },
        lagrangian: LagrangianConfig::default(),
        fluid: FluidProperties { rho: BLOOD_DENSITY, mu },
        boundary: BoundaryConditionSet {
            patches: vec![
                disk(
                    Face::YMin,
                    [0.0, 0.0, 0.0],
                    U_BEND_RADIUS,
                    PatchKind::Velocity {
                        profile: VelocityProfile::Parabolic {
                            u_max_m_per_s: U_BEND_U_MAX,
                        },
                        scale: TimeSeries::Constant(1.0),
                    },
                ),
                disk(
                    Face::XMax,
                    [x_max, outlet_y, 0.0],
                    U_BEND_RADIUS,
                    PatchKind::Pressure {
                        value_pa: TimeSeries::Constant(0.0),
                    },
                ),
            ],
        },
        time: TimeControls {
            dt: 1e-3,
            t_end: 0.5,
            steady_tolerance: 1e-8,
            max_steps: 500,
        },
        solver: SolverOptions {
            advection: Advection::Upwind,
            ..SolverOptions::default()
        },
        features: Features::default(),
        output: OutputConfig {
            log_every: 10,
            probes: vec![ProbeLine {
                name: "outlet-start".into(),
                start_m: [U_BEND_BEND_RADIUS, outlet_y - U_BEND_RADIUS, 0.0],
                end_m: [U_BEND_BEND_RADIUS, outlet_y + U_BEND_RADIUS, 0.0],
                samples: 41,
            }],
            ..OutputConfig::default()
        },
        exact: None,
    }
}

/// Lid-driven cube without immersed boundary (plain projection scheme).
pub fn lid_driven() -> CaseConfig {
    CaseConfig {
        name: "lid-driven".into(),
        domain: DomainConfig {
            min_m: [0.0; 3],
            max_m: [0.01; 3],
            h_m: 1e-3,
            crop_band_cells: 3.0,
        },
        geometry: GeometryConfig::None,
        lagrangian: LagrangianConfig::default(),
        fluid: FluidProperties { rho: 1000.0, mu: 1e-3 },
        boundary: BoundaryConditionSet {
            patches: vec![Patch {
                face: Face::YMax,
                region: Region::Whole,
                kind: PatchKind::Velocity {
                    profile: VelocityProfile::Uniform {
                        velocity_m_per_s: [0.01, 0.0, 0.0],
                    },
                    scale: TimeSeries::Constant(1.0),
                },
            }],
        },
        time: TimeControls {
            dt: 0.01,
            t_end: 2.0,
            steady_tolerance: 1e-8,
            max_steps: 200,
        },
        solver: SolverOptions::default(),
        features: Features {
            immersed_boundary: false,
            crop: false,
            monitor: MonitorKind::Verbatim,
        },
        output: OutputConfig {
            log_every: 10,
            probes: vec![ProbeLine {
                name: "vertical-centerline".into(),
                start_m: [0.005, 0.0, 0.005],
                end_m: [0.005, 0.01, 0.005],
                samples: 11,
            }],
            ..OutputConfig::default()
        },
        exact: None,
    }
}
