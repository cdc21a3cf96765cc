//! Boundary patches on the faces of the box and node classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::EulerianGrid;
use crate::{lit, Real, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Face {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl Face {
    pub const ALL: [Face; 6] = [Face::XMin, Face::XMax, Face::YMin, Face::YMax, Face::ZMin, Face::ZMax];

    pub fn axis(self) -> usize {
        self as usize / 2
    }

    pub fn is_max(self) -> bool {
        self as usize % 2 == 1
    }

    /// Unit normal pointing into the domain.
    pub fn inward(self) -> [f64; 3] {
        let mut n = [0.0; 3];
        n[self.axis()] = if self.is_max() { -1.0 } else { 1.0 };
        n
    }

    /// The two tangential axes in increasing order.
    pub fn tangential(self) -> [usize; 2] {
        match self.axis() {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        }
    }
}

/// Piecewise-linear function of time; constant outside the table range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeSeries {
    Constant(f64),
    /// `[time_s, value]` rows with strictly increasing time.
    Table(Vec<[f64; 2]>),
}

impl TimeSeries {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            TimeSeries::Constant(v) => *v,
            TimeSeries::Table(rows) => {
                let k = rows.partition_point(|r| r[0] <= t);
                if k == 0 {
                    rows[0][1]
                } else if k == rows.len() {
                    rows[k - 1][1]
                } else {
                    let (a, b) = (rows[k - 1], rows[k]);
                    a[1] + (b[1] - a[1]) * (t - a[0]) / (b[0] - a[0])
                }
            }
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if let TimeSeries::Table(rows) = self {
            if rows.is_empty() {
                return Err(Error::Config(format!("{what}: empty time table")));
            }
            if rows.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                return Err(Error::Config(format!("{what}: table times must increase strictly")));
            }
        }
        Ok(())
    }
}

/// Part of a face covered by a patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    Whole,
    Disk {
        center_m: [f64; 3],
        radius_m: f64,
    },
    /// Polygon in the face's tangential coordinates (y,z for x faces, x,z for
    /// y faces, x,y for z faces).
    Polygon {
        vertices_m: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityProfile {
    Uniform {
        velocity_m_per_s: [f64; 3],
    },
    /// `u_max (1 − r²/R²)` along the inward normal; needs a disk region.
    Parabolic {
        u_max_m_per_s: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatchKind {
    NoSlip,
    Velocity {
        profile: VelocityProfile,
        /// Multiplier applied to the profile over time.
        #[serde(default = "unit_series")]
        scale: TimeSeries,
    },
    Pressure {
        value_pa: TimeSeries,
    },
}

fn unit_series() -> TimeSeries {
    TimeSeries::Constant(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PatchTable")]
pub struct Patch {
    pub face: Face,
    pub region: Region,
    #[serde(flatten)]
    pub kind: PatchKind,
}

/// Flat on-disk form of a patch; serde cannot reject unknown keys through a
/// flattened tagged enum, so the kind is assembled here.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchTable {
    face: Face,
    region: Region,
    kind: String,
    profile: Option<VelocityProfile>,
    scale: Option<TimeSeries>,
    value_pa: Option<TimeSeries>,
}

impl TryFrom<PatchTable> for Patch {
    type Error = String;

    fn try_from(t: PatchTable) -> std::result::Result<Self, String> {
        let stray = |name: &str, present: bool| {
            if present {
                Err(format!("`{name}` does not apply to a {} patch", t.kind))
            } else {
                Ok(())
            }
        };
        let kind = match t.kind.as_str() {
            "no_slip" => {
                stray("profile", t.profile.is_some())?;
                stray("scale", t.scale.is_some())?;
                stray("value_pa", t.value_pa.is_some())?;
                PatchKind::NoSlip
            }
            "velocity" => {
                stray("value_pa", t.value_pa.is_some())?;
                PatchKind::Velocity {
                    profile: t.profile.clone().ok_or("velocity patch needs `profile`")?,
                    scale: t.scale.clone().unwrap_or_else(unit_series),
                }
            }
            "pressure" => {
                stray("profile", t.profile.is_some())?;
                stray("scale", t.scale.is_some())?;
                PatchKind::Pressure {
                    value_pa: t.value_pa.clone().ok_or("pressure patch needs `value_pa`")?,
                }
            }
            other => {
                return Err(format!(
                    "unknown patch kind `{other}`; expected no_slip, velocity or pressure"
                ))
            }
        };
        Ok(Patch {
            face: t.face,
            region: t.region,
            kind,
        })
    }
}

/// Ordered list of patches; the first patch containing a face node wins and
/// face nodes covered by no patch are no-slip walls.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConditionSet {
    #[serde(default)]
    pub patches: Vec<Patch>,
}

fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

impl Patch {
    fn contains(&self, x: [f64; 3], tol: f64) -> bool {
        match &self.region {
            Region::Whole => true,
            Region::Disk { center_m, radius_m } => {
                let [a, b] = self.face.tangential();
                let d2 = (x[a] - center_m[a]).powi(2) + (x[b] - center_m[b]).powi(2);
                d2.sqrt() <= radius_m + tol
            }
            Region::Polygon { vertices_m } => {
                let [a, b] = self.face.tangential();
                point_in_polygon([x[a], x[b]], vertices_m)
            }
        }
    }

    fn velocity(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        match &self.kind {
            PatchKind::Velocity { profile, scale } => {
                let s = scale.at(t);
                match profile {
                    VelocityProfile::Uniform { velocity_m_per_s: v } => [v[0] * s, v[1] * s, v[2] * s],
                    VelocityProfile::Parabolic { u_max_m_per_s } => {
                        let Region::Disk { center_m, radius_m } = &self.region else {
                            unreachable!("validated")
                        };
                        let [a, b] = self.face.tangential();
                        let r2 = ((x[a] - center_m[a]).powi(2) + (x[b] - center_m[b]).powi(2)) / (radius_m * radius_m);
                        let mag = (u_max_m_per_s * (1.0 - r2)).max(0.0) * s;
                        let n = self.face.inward();
                        [n[0] * mag, n[1] * mag, n[2] * mag]
                    }
                }
            }
            _ => [0.0; 3],
        }
    }
}

impl BoundaryConditionSet {
    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.patches.iter().enumerate() {
            let what = format!("patch {i} on {:?}", p.face);
            match &p.region {
                Region::Disk { radius_m, .. } if !(*radius_m > 0.0) => {
                    return Err(Error::Config(format!("{what}: disk radius must be positive")))
                }
                Region::Polygon { vertices_m } if vertices_m.len() < 3 => {
                    return Err(Error::Config(format!("{what}: polygon needs at least 3 vertices")))
                }
                _ => {}
            }
            match &p.kind {
                PatchKind::Velocity { profile, scale } => {
                    scale.validate(&what)?;
                    if matches!(profile, VelocityProfile::Parabolic { .. }) && !matches!(p.region, Region::Disk { .. })
                    {
                        return Err(Error::Config(format!("{what}: parabolic profile needs a disk region")));
                    }
                }
                PatchKind::Pressure { value_pa } => value_pa.validate(&what)?,
                PatchKind::NoSlip => {}
            }
        }
        Ok(())
    }

    pub fn has_pressure_patch(&self) -> bool {
        self.patches
            .iter()
            .any(|p| matches!(p.kind, PatchKind::Pressure { .. }))
    }
}

/// Role of an active node in the discretisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    /// Interior node: not on the box, all six neighbours active.
    Interior,
    /// Face-interior node of a pressure patch; velocity is unknown, pressure
    /// prescribed. `axis` is the face normal axis, `inward` the side (±1) of
    /// the existing neighbour.
    Pressure { axis: u8, inward: i8 },
    /// Velocity prescribed: walls, velocity patches, box edges and corners,
    /// and the boundary of a cropped region.
    Velocity,
}

/// Per-node classification with the patch responsible for boundary data.
#[derive(Debug, Clone)]
pub struct Classification {
    pub class: Vec<NodeClass>,
    /// Patch index for face nodes matched by a patch.
    pub patch: Vec<Option<usize>>,
}

impl Classification {
    pub fn count(&self, pred: impl Fn(NodeClass) -> bool) -> usize {
        self.class.iter().filter(|&&c| pred(c)).count()
    }

    pub fn is_unknown(&self, a: usize) -> bool {
        !matches!(self.class[a], NodeClass::Velocity)
    }
}

pub fn classify<T: Real>(grid: &EulerianGrid<T>, bcs: &BoundaryConditionSet) -> Result<Classification> {
    bcs.validate()?;
    let n = grid.n_active();
    let dims = grid.dims();
    let tol = grid.h().as_f64() * 1e-9;
    let mut class = Vec::with_capacity(n);
    let mut patch = Vec::with_capacity(n);
    let mut demoted = 0usize;
    for a in 0..n {
        let ijk = grid.active_ijk(a);
        let faces: Vec<Face> = Face::ALL
            .into_iter()
            .filter(|f| {
                let i = ijk[f.axis()];
                if f.is_max() {
                    i + 1 == dims[f.axis()]
                } else {
                    i == 0
                }
            })
            .collect();
        let all_nb = (0..3).all(|ax| grid.neighbor(a, ax, -1).is_some() && grid.neighbor(a, ax, 1).is_some());
        if faces.is_empty() {
            class.push(if all_nb {
                NodeClass::Interior
            } else {
                NodeClass::Velocity
            });
            patch.push(None);
            continue;
        }
        let x = grid.coord(a);
        let xf = [x[0].as_f64(), x[1].as_f64(), x[2].as_f64()];
        let hit = if faces.len() == 1 {
            bcs.patches
                .iter()
                .position(|p| p.face == faces[0] && p.contains(xf, tol))
        } else {
            None
        };
        let mut c = NodeClass::Velocity;
        if let Some(pi) = hit {
            if matches!(bcs.patches[pi].kind, PatchKind::Pressure { .. }) {
                let f = faces[0];
                let axis = f.axis();
                let inward: isize = if f.is_max() { -1 } else { 1 };
                let ok = grid.neighbor(a, axis, inward).is_some()
                    && f.tangential()
                        .iter()
                        .all(|&t| grid.neighbor(a, t, -1).is_some() && grid.neighbor(a, t, 1).is_some());
                if ok {
                    c = NodeClass::Pressure {
                        axis: axis as u8,
                        inward: inward as i8,
                    };
                } else {
                    demoted += 1;
                }
            }
        }
        class.push(c);
        patch.push(hit);
    }
    if demoted > 0 {
        log::info!("{demoted} pressure-patch nodes lack neighbours and are treated as walls");
    }
    Ok(Classification { class, patch })
}

/// Prescribed velocity at node `a` at time `t` (zero for walls and cropped
/// boundaries, and for unknown nodes).
pub fn boundary_velocity<T: Real>(
    grid: &EulerianGrid<T>,
    cls: &Classification,
    bcs: &BoundaryConditionSet,
    a: usize,
    t: f64,
) -> Vec3<T> {
    match (cls.class[a], cls.patch[a]) {
        (NodeClass::Velocity, Some(pi)) => {
            let x = grid.coord(a);
            let v = bcs.patches[pi].velocity([x[0].as_f64(), x[1].as_f64(), x[2].as_f64()], t);
            Vec3::new(lit(v[0]), lit(v[1]), lit(v[2]))
        }
        _ => Vec3::zeros(),
    }
}

/// Prescribed pressure at a pressure node at time `t`.
pub fn boundary_pressure<T: Real>(cls: &Classification, bcs: &BoundaryConditionSet, a: usize, t: f64) -> Option<T> {
    match (cls.class[a], cls.patch[a]) {
        (NodeClass::Pressure { .. }, Some(pi)) => match &bcs.patches[pi].kind {
            PatchKind::Pressure { value_pa } => Some(lit(value_pa.at(t))),
            _ => None,
        },
        _ => None,
    }
}
