//! The time stepper: momentum, immersed-boundary correction, pressure
//! increment, projection, rotation.

use serde::{Deserialize, Serialize};

use super::bc::{boundary_pressure, boundary_velocity, classify, BoundaryConditionSet, Classification, NodeClass};
use super::momentum::{assemble_momentum, Advection, UnknownIndex};
use super::monitor::{steady_monitor, MonitorKind};
use super::operators::FvOperators;
use super::poisson::{PoissonMethod, PoissonSolver};
use crate::error::{Error, Result};
use crate::grid::{EulerianGrid, FieldState};
use crate::ibforce::ForceSystem;
use crate::kernel::CouplingMatrix;
use crate::linsolve::{bicgstab_solve, KrylovOptions, SolveReport, DEFAULT_DENSE_CAP};
use crate::{lit, Real, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidProperties {
    #[serde(rename = "density_kg_per_m3")]
    pub rho: f64,
    #[serde(rename = "viscosity_pa_s")]
    pub mu: f64,
}

impl FluidProperties {
    pub fn new(rho: f64, mu: f64) -> Result<Self> {
        let p = Self { rho, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Config(format!("density must be positive, got {}", self.rho)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::Config(format!("viscosity must be positive, got {}", self.mu)));
        }
        Ok(())
    }

    pub fn nu(&self) -> f64 {
        self.mu / self.rho
    }
}

fn default_steady_tolerance() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeControls {
    #[serde(rename = "dt_s")]
    pub dt: f64,
    #[serde(rename = "t_end_s")]
    pub t_end: f64,
    #[serde(default = "default_steady_tolerance")]
    pub steady_tolerance: f64,
    pub max_steps: usize,
}

impl TimeControls {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.steady_tolerance > 0.0) {
            return Err(Error::Config("steady tolerance must be positive".into()));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::Config("end time must be positive".into()));
        }
        Ok(())
    }
}

fn default_momentum_tol() -> f64 {
    1e-8
}
fn default_poisson_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    5000
}
fn default_dense_cap() -> usize {
    DEFAULT_DENSE_CAP
}
fn default_poisson_method() -> PoissonMethod {
    PoissonMethod::Direct
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    #[serde(default)]
    pub advection: Advection,
    #[serde(default = "default_momentum_tol")]
    pub momentum_tol: f64,
    #[serde(default = "default_max_iter")]
    pub momentum_max_iter: usize,
    #[serde(default = "default_poisson_method")]
    pub poisson_method: PoissonMethod,
    #[serde(default = "default_poisson_tol")]
    pub poisson_tol: f64,
    #[serde(default = "default_max_iter")]
    pub poisson_max_iter: usize,
    /// Largest Lagrangian cloud accepted for the dense force system.
    #[serde(default = "default_dense_cap")]
    pub dense_cap: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            advection: Advection::Central,
            momentum_tol: default_momentum_tol(),
            momentum_max_iter: default_max_iter(),
            poisson_method: default_poisson_method(),
            poisson_tol: default_poisson_tol(),
            poisson_max_iter: default_max_iter(),
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }
}

/// Diagnostics of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub nrmse: [f64; 3],
    /// Max enforcement error right after the correction step, and after the
    /// projection.
    pub enforcement_corrected: f64,
    pub enforcement_final: f64,
    /// RMS divergence per unit volume of the tentative, corrected and
    /// projected velocities.
    pub div_star: f64,
    pub div_corrected: f64,
    pub div_next: f64,
    pub momentum_iterations: [usize; 3],
    pub momentum_residual: f64,
    pub poisson_iterations: usize,
    pub poisson_residual: f64,
}

/// Lagrangian side of the immersed boundary.
#[derive(Debug, Clone)]
pub struct ImmersedBoundary<T: Real> {
    pub system: ForceSystem<T>,
    pub boundary_velocity: Vec<Vec3<T>>,
}

#[derive(Debug, Clone)]
pub struct Stepper<T: Real> {
    grid: EulerianGrid<T>,
    bcs: BoundaryConditionSet,
    cls: Classification,
    ops: FvOperators<T>,
    idx: UnknownIndex,
    poisson: PoissonSolver<T>,
    props: FluidProperties,
    dt: f64,
    opts: SolverOptions,
    ib: Option<ImmersedBoundary<T>>,
    pub state: FieldState<T>,
}

fn rms<T: Real>(v: &[T]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|x| x.as_f64().powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

impl<T: Real> Stepper<T> {
    /// Sets up operators and factorizations and the initial state (fluid at
    /// rest, zero pressure, boundary data at time 0).
    pub fn new(
        grid: EulerianGrid<T>,
        bcs: BoundaryConditionSet,
        props: FluidProperties,
        dt: f64,
        opts: SolverOptions,
    ) -> Result<Self> {
        props.validate()?;
        if !(dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let cls = classify(&grid, &bcs)?;
        let ops = FvOperators::new(&grid, &cls)?;
        let idx = UnknownIndex::new(&ops);
        let poisson = PoissonSolver::new(
            &ops,
            opts.poisson_method,
            KrylovOptions::new(opts.poisson_tol, opts.poisson_max_iter),
        )?;
        log::info!(
            "stepper: {} active nodes, {} velocity unknowns, {} pressure rows",
            grid.n_active(),
            idx.len(),
            ops.n_rows()
        );
        let mut state = FieldState::zeros(&grid);
        for a in 0..grid.n_active() {
            state.u_n[a] = boundary_velocity(&grid, &cls, &bcs, a, 0.0);
            if let Some(p) = boundary_pressure(&cls, &bcs, a, 0.0) {
                state.p_n[a] = p;
            }
        }
        state.u_next = state.u_n.clone();
        state.u_star = state.u_n.clone();
        Ok(Self {
            grid,
            bcs,
            cls,
            ops,
            idx,
            poisson,
            props,
            dt,
            opts,
            ib: None,
            state,
        })
    }

    /// Attaches an immersed boundary: factors the force system over the
    /// unknown-velocity nodes.
    pub fn with_immersed_boundary(
        mut self,
        coupling: CouplingMatrix<T>,
        areas: Vec<T>,
        boundary_velocity: Vec<Vec3<T>>,
    ) -> Result<Self> {
        if coupling.n_nodes() != self.grid.n_active() {
            return Err(Error::Shape("coupling built on another grid".into()));
        }
        if boundary_velocity.len() != coupling.n_points() {
            return Err(Error::Shape(
                "one boundary velocity per Lagrangian point expected".into(),
            ));
        }
        let mask: Vec<bool> = (0..self.grid.n_active()).map(|a| self.ops.is_unknown(a)).collect();
        let system = ForceSystem::new(
            coupling,
            areas,
            lit(self.dt),
            lit(self.props.rho),
            Some(mask),
            self.opts.dense_cap,
        )?;
        self.ib = Some(ImmersedBoundary {
            system,
            boundary_velocity,
        });
        Ok(self)
    }

    pub fn grid(&self) -> &EulerianGrid<T> {
        &self.grid
    }

    pub fn operators(&self) -> &FvOperators<T> {
        &self.ops
    }

    pub fn classification(&self) -> &Classification {
        &self.cls
    }

    pub fn boundary_conditions(&self) -> &BoundaryConditionSet {
        &self.bcs
    }

    pub fn poisson(&self) -> &PoissonSolver<T> {
        &self.poisson
    }

    pub fn immersed_boundary(&self) -> Option<&ImmersedBoundary<T>> {
        self.ib.as_ref()
    }

    pub fn props(&self) -> FluidProperties {
        self.props
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Prescribed velocity at every node at time `t` (zero at unknown nodes).
    pub fn boundary_field(&self, t: f64) -> Vec<Vec3<T>> {
        (0..self.grid.n_active())
            .map(|a| boundary_velocity(&self.grid, &self.cls, &self.bcs, a, t))
            .collect()
    }

    /// RMS divergence per unit volume over pressure rows.
    pub fn divergence_norm(&self, u: &[Vec3<T>]) -> f64 {
        rms(&self.ops.divergence(u))
    }

    /// Solves the momentum equation for the tentative velocity at `t + Δt`
    /// from `u_n` and `p_n`; prescribed nodes get their data at `t + Δt`.
    pub fn tentative_velocity(
        &self,
        u_n: &[Vec3<T>],
        p_n: &[T],
        t_next: f64,
    ) -> Result<(Vec<Vec3<T>>, [usize; 3], f64)> {
        let dt: T = lit(self.dt);
        let sys = assemble_momentum(&self.ops, &self.idx, u_n, lit(self.props.nu()), dt, self.opts.advection)?;
        let grad = self.ops.gradient(p_n);
        let c = dt / lit::<T>(self.props.rho);
        let mut u = self.boundary_field(t_next);
        let mut iters = [0usize; 3];
        let mut worst = 0.0f64;
        let opts = KrylovOptions::new(self.opts.momentum_tol, self.opts.momentum_max_iter);
        for comp in 0..3 {
            let mut b: Vec<T> = self
                .idx
                .nodes
                .iter()
                .map(|&a| u_n[a][comp] - c * grad[a][comp])
                .collect();
            for &(row, node, coef) in &sys.boundary {
                b[row] -= coef * u[node][comp];
            }
            let x0: Vec<T> = self.idx.nodes.iter().map(|&a| u_n[a][comp]).collect();
            let (x, rep) = bicgstab_solve(&sys.matrix, &b, Some(&x0), opts).map_err(|e| match e {
                Error::NotConverged { report, .. } => Error::NotConverged {
                    solver: "momentum solve",
                    report,
                },
                other => other,
            })?;
            iters[comp] = rep.iterations;
            worst = worst.max(rep.relative_residual);
            for (k, &a) in self.idx.nodes.iter().enumerate() {
                u[a][comp] = x[k];
            }
        }
        Ok((u, iters, worst))
    }

    /// Pressure increment for the corrected velocity `u_c`:
    /// `S Φ = −(ρ/Δt) D u_c + D_U G(Φ_P)`, where `phi_p` holds the increment
    /// at pressure nodes (other entries ignored). Returns Φ on every node.
    pub fn pressure_poisson(&self, u_c: &[Vec3<T>], phi_p: &[T]) -> Result<(Vec<T>, SolveReport)> {
        let scale = lit::<T>(self.props.rho / self.dt);
        let mut b: Vec<T> = self.ops.divergence_flux(u_c).into_iter().map(|d| -scale * d).collect();
        let mut data = vec![T::zero(); self.grid.n_active()];
        let mut any = false;
        for a in 0..self.grid.n_active() {
            if matches!(self.cls.class[a], NodeClass::Pressure { .. }) && phi_p[a] != T::zero() {
                data[a] = phi_p[a];
                any = true;
            }
        }
        if any {
            let g = self.ops.gradient(&data);
            let dg = self.ops.divergence_flux(&g);
            for (bi, d) in b.iter_mut().zip(dg) {
                *bi += d;
            }
        }
        let (x, rep) = self.poisson.solve(&b)?;
        let mut phi = self.ops.rows_to_nodes(&x);
        for a in 0..self.grid.n_active() {
            if matches!(self.cls.class[a], NodeClass::Pressure { .. }) {
                phi[a] = phi_p[a];
            }
        }
        Ok((phi, rep))
    }

    /// `u = u_c − (Δt/ρ) G Φ` at unknown nodes and `p = pⁿ + Φ`.
    pub fn update_velocity_pressure(&self, u_c: &[Vec3<T>], phi: &[T], p_n: &[T]) -> (Vec<Vec3<T>>, Vec<T>) {
        let c = lit::<T>(self.dt / self.props.rho);
        let g = self.ops.gradient(phi);
        let u = u_c
            .iter()
            .enumerate()
            .map(|(a, v)| if self.ops.is_unknown(a) { v - g[a] * c } else { *v })
            .collect();
        let p = p_n.iter().zip(phi).map(|(p, f)| *p + *f).collect();
        (u, p)
    }

    /// One full step; the state is rotated on success.
    pub fn advance(&mut self) -> Result<StepRecord> {
        let t0 = self.state.time.as_f64();
        let t1 = t0 + self.dt;
        let (u_star, momentum_iterations, momentum_residual) =
            self.tentative_velocity(&self.state.u_n, &self.state.p_n, t1)?;
        let div_star = self.divergence_norm(&u_star);
        let (u_c, f_body, enforcement_corrected) = match &self.ib {
            Some(ib) => {
                let c = ib.system.enforce(&u_star, &ib.boundary_velocity)?;
                let res = ib.system.enforcement_residual(&c.velocity, &ib.boundary_velocity);
                (c.velocity, c.body, res.as_f64())
            }
            None => (u_star.clone(), self.grid.zeros_vector(), 0.0),
        };
        let div_corrected = self.divergence_norm(&u_c);
        let mut phi_p = vec![T::zero(); self.grid.n_active()];
        for (a, v) in phi_p.iter_mut().enumerate() {
            if let Some(p) = boundary_pressure::<T>(&self.cls, &self.bcs, a, t1) {
                *v = p - self.state.p_n[a];
            }
        }
        let (phi, prep) = self.pressure_poisson(&u_c, &phi_p)?;
        let (u_next, p_next) = self.update_velocity_pressure(&u_c, &phi, &self.state.p_n);
        let div_next = self.divergence_norm(&u_next);
        let enforcement_final = self.ib.as_ref().map_or(0.0, |ib| {
            ib.system.enforcement_residual(&u_next, &ib.boundary_velocity).as_f64()
        });
        let nrmse = steady_monitor(&self.state.u_n, &u_next, MonitorKind::Verbatim);
        let s = &mut self.state;
        s.u_star = u_star;
        s.f_body = f_body;
        s.phi = phi;
        s.u_next = u_next.clone();
        s.u_n = u_next;
        s.p_n = p_next;
        s.step += 1;
        s.time = lit(t1);
        Ok(StepRecord {
            step: s.step,
            time: t1,
            nrmse,
            enforcement_corrected,
            enforcement_final,
            div_star,
            div_corrected,
            div_next,
            momentum_iterations,
            momentum_residual,
            poisson_iterations: prep.iterations,
            poisson_residual: prep.relative_residual,
        })
    }

    /// Marches until the steady monitor falls below tolerance in every
    /// component, the end time is reached, or `max_steps` is exhausted.
    /// `on_step` sees every record and may stop the run by returning false.
    pub fn run(
        &mut self,
        controls: &TimeControls,
        monitor: MonitorKind,
        mut on_step: impl FnMut(&StepRecord, &Self) -> bool,
    ) -> Result<RunSummary> {
        controls.validate()?;
        if (controls.dt - self.dt).abs() > 1e-15 * self.dt {
            return Err(Error::Config(
                "time controls disagree with the stepper's time step".into(),
            ));
        }
        let mut last = None;
        let mut steady = false;
        let mut stopped = false;
        while self.state.step < controls.max_steps && self.state.time.as_f64() < controls.t_end * (1.0 - 1e-12) {
            let prev = self.state.u_n.clone();
            let mut rec = self.advance()?;
            if monitor != MonitorKind::Verbatim {
                rec.nrmse = steady_monitor(&prev, &self.state.u_n, monitor);
            }
            let keep = on_step(&rec, self);
            // from rest the first step has a constant previous field, which
            // the monitor reports as 0; steadiness is judged from step 2 on
            let done = rec.step >= 2 && rec.nrmse.iter().all(|&e| e < controls.steady_tolerance);
            last = Some(rec);
            if done {
                steady = true;
                break;
            }
            if !keep {
                stopped = true;
                break;
            }
        }
        Ok(RunSummary {
            steps: self.state.step,
            time: self.state.time.as_f64(),
            steady,
            stopped,
            last,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub time: f64,
    pub steady: bool,
    /// Stopped by the callback.
    pub stopped: bool,
    pub last: Option<StepRecord>,
}
