//! Case configuration: a TOML document with unit-suffixed keys, validated on
//! load. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ipcs::{BoundaryConditionSet, FluidProperties, MonitorKind, SolverOptions, TimeControls};
use crate::post::PoiseuilleTube;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub min_m: [f64; 3],
    pub max_m: [f64; 3],
    pub h_m: f64,
    /// Crop band around the surface in multiples of h.
    #[serde(default = "default_band")]
    pub crop_band_cells: f64,
}

fn default_band() -> f64 {
    3.0
}

/// Immersed surface. Generated tubes extend a few cells past the box so the
/// solid used for cropping has no facets on box faces; the Lagrangian cloud
/// is the lateral wall trimmed away from the box faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryConfig {
    /// No immersed surface.
    #[default]
    None,
    /// Straight circular tube between two axis points.
    Tube {
        start_m: [f64; 3],
        end_m: [f64; 3],
        radius_m: f64,
    },
    /// Inlet straight along +y from `origin_m`, a 90° bend towards +x and an
    /// outlet straight, all of radius `radius_m`.
    UBend {
        origin_m: [f64; 3],
        inlet_length_m: f64,
        bend_radius_m: f64,
        outlet_length_m: f64,
        radius_m: f64,
    },
    /// Closed STL or OBJ surface.
    File { path: PathBuf },
}

fn default_trim() -> f64 {
    1.5
}

fn default_seed() -> u64 {
    crate::surface::DEFAULT_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagrangianConfig {
    /// Target point spacing; defaults to h.
    #[serde(default)]
    pub target_ds_m: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Facets closer than this many h to a box face crossed by the surface
    /// are not sampled.
    #[serde(default = "default_trim")]
    pub trim_cells: f64,
    /// Facet edge length of generated tubes in multiples of h.
    #[serde(default = "default_facet_cells")]
    pub facet_edge_cells: f64,
}

fn default_facet_cells() -> f64 {
    0.5
}

impl Default for LagrangianConfig {
    fn default() -> Self {
        Self {
            target_ds_m: None,
            seed: default_seed(),
            trim_cells: default_trim(),
            facet_edge_cells: default_facet_cells(),
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Features {
    #[serde(default = "yes")]
    pub immersed_boundary: bool,
    #[serde(default = "yes")]
    pub crop: bool,
    #[serde(default)]
    pub monitor: MonitorKind,
}

impl Default for Features {
    fn default() -> Self {
        Self {
            immersed_boundary: true,
            crop: true,
            monitor: MonitorKind::Verbatim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeLine {
    pub name: String,
    pub start_m: [f64; 3],
    pub end_m: [f64; 3],
    pub samples: usize,
}

fn default_log_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Run-log cadence in steps (the final step is always logged).
    #[serde(default = "default_log_every")]
    pub log_every: usize,
    /// Write grid fields and surface data as legacy VTK at the end.
    #[serde(default = "yes")]
    pub fields: bool,
    /// Also write grid fields every this many steps.
    #[serde(default)]
    pub snapshot_every: Option<usize>,
    /// Compute wall shear stress on the Lagrangian cloud.
    #[serde(default = "yes")]
    pub wall_shear_stress: bool,
    #[serde(default)]
    pub probes: Vec<ProbeLine>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            log_every: 1,
            fields: true,
            snapshot_every: None,
            wall_shear_stress: true,
            probes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExactSolution {
    Poiseuille(PoiseuilleTube),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub name: String,
    pub domain: DomainConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub lagrangian: LagrangianConfig,
    pub fluid: FluidProperties,
    #[serde(default)]
    pub boundary: BoundaryConditionSet,
    pub time: TimeControls,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub features: Features,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub exact: Option<ExactSolution>,
}

impl CaseConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        // surface paths are relative to the config file
        if let GeometryConfig::File { path: p } = &mut cfg.geometry {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialise config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        if !(d.h_m > 0.0 && d.h_m.is_finite()) {
            return Err(Error::Config(format!("domain.h_m must be positive, got {}", d.h_m)));
        }
        if self.features.crop && !matches!(self.geometry, GeometryConfig::None) && d.crop_band_cells < 2.0 {
            return Err(Error::Config(format!(
                "domain.crop_band_cells = {} is below 2; kernel support would be truncated",
                d.crop_band_cells
            )));
        }
        if let Some(ds) = self.lagrangian.target_ds_m {
            if !(ds > 0.0) {
                return Err(Error::Config("lagrangian.target_ds_m must be positive".into()));
            }
        }
        if !(self.lagrangian.trim_cells >= 1.0) {
            return Err(Error::Config("lagrangian.trim_cells must be at least 1".into()));
        }
        if !(self.lagrangian.facet_edge_cells > 0.0) {
            return Err(Error::Config("lagrangian.facet_edge_cells must be positive".into()));
        }
        self.fluid.validate()?;
        self.time.validate()?;
        self.boundary.validate()?;
        if self.output.log_every == 0 {
            return Err(Error::Config("output.log_every must be at least 1".into()));
        }
        if self.output.snapshot_every == Some(0) {
            return Err(Error::Config("output.snapshot_every must be at least 1".into()));
        }
        for p in &self.output.probes {
            if p.samples < 2 {
                return Err(Error::Config(format!("probe {} needs at least 2 samples", p.name)));
            }
        }
        match &self.geometry {
            GeometryConfig::Tube {
                radius_m,
                start_m,
                end_m,
            } if !(*radius_m > 0.0) || start_m == end_m => Err(Error::Config(
                "tube needs a positive radius and distinct end points".into(),
            )),
            GeometryConfig::UBend {
                radius_m,
                bend_radius_m,
                inlet_length_m,
                outlet_length_m,
                ..
            } if !(*radius_m > 0.0
                && bend_radius_m > radius_m
                && *inlet_length_m >= 0.0
                && *outlet_length_m >= 0.0) =>
            {
                Err(Error::Config(
                    "u_bend needs positive radius, bend radius above the tube radius and non-negative straights".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    /// Lagrangian spacing in use.
    pub fn target_ds(&self) -> f64 {
        self.lagrangian.target_ds_m.unwrap_or(self.domain.h_m)
    }
}

#[cfg(test)]
mod tests {
    use super::super::presets::{preset, PRESET_NAMES};
    use super::*;

    #[test]
    fn presets_round_trip_through_toml() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            let text = cfg.to_toml_string().unwrap();
            let back = CaseConfig::from_toml_str(&text).unwrap();
            assert_eq!(back, cfg, "{name}");
            assert_eq!(back.to_toml_string().unwrap(), text);
        }
    }

    fn minimal() -> String {
        r#"
name = "box"
[domain]
min_m = [0.0, 0.0, 0.0]
max_m = [0.01, 0.01, 0.01]
h_m = 0.001
[fluid]
density_kg_per_m3 = 1000.0
viscosity_pa_s = 0.001
[time]
dt_s = 0.01
t_end_s = 1.0
max_steps = 10
"#
        .to_string()
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = CaseConfig::from_toml_str(&minimal()).unwrap();
        assert_eq!(cfg.geometry, GeometryConfig::None);
        assert_eq!(cfg.domain.crop_band_cells, 3.0);
        assert!(cfg.features.immersed_boundary);
        assert_eq!(cfg.time.steady_tolerance, 1e-8);
        assert_eq!(cfg.target_ds(), 0.001);
    }

    #[test]
    fn missing_density_names_the_field() {
        let text = minimal().replace("density_kg_per_m3 = 1000.0\n", "");
        let err = CaseConfig::from_toml_str(&text).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("density_kg_per_m3"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = minimal().replace("h_m = 0.001", "h_m = 0.001\nh = 0.001");
        let err = CaseConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
    }

    #[test]
    fn invalid_values_are_rejected() {
        let bad_h = minimal().replace("h_m = 0.001", "h_m = -0.001");
        assert!(CaseConfig::from_toml_str(&bad_h).is_err());
        let bad_mu = minimal().replace("viscosity_pa_s = 0.001", "viscosity_pa_s = 0.0");
        assert!(CaseConfig::from_toml_str(&bad_mu).is_err());
        let narrow = minimal().replace(
            "h_m = 0.001",
            "h_m = 0.001\ncrop_band_cells = 1.5",
        ) + "[geometry]\ntype = \"tube\"\nstart_m = [0.0, 0.005, 0.005]\nend_m = [0.01, 0.005, 0.005]\nradius_m = 0.003\n";
        let err = CaseConfig::from_toml_str(&narrow).unwrap_err();
        assert!(err.to_string().contains("crop_band_cells"), "{err}");
    }

    #[test]
    fn inlet_table_parses() {
        let text = minimal()
            + r#"
[[boundary.patches]]
face = "x_min"
region = { shape = "disk", center_m = [0.0, 0.005, 0.005], radius_m = 0.002 }
kind = "velocity"
profile = { type = "parabolic", u_max_m_per_s = 0.1 }
scale = [[0.0, 0.0], [0.5, 1.0], [1.0, 0.2]]
"#;
        let cfg = CaseConfig::from_toml_str(&text).unwrap();
        let crate::ipcs::PatchKind::Velocity { scale, .. } = &cfg.boundary.patches[0].kind else {
            panic!("velocity patch expected")
        };
        assert!((scale.at(0.25) - 0.5).abs() < 1e-15);
        assert!((scale.at(0.75) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn relative_surface_path_resolves_against_the_config() {
        let dir = tempfile::tempdir().unwrap();
        let text = minimal() + "[geometry]\ntype = \"file\"\npath = \"vessel.stl\"\n";
        let path = dir.path().join("case.toml");
        std::fs::write(&path, text).unwrap();
        let cfg = CaseConfig::load(&path).unwrap();
        assert_eq!(
            cfg.geometry,
            GeometryConfig::File {
                path: dir.path().join("vessel.stl")
            }
        );
    }
}
