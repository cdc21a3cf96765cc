//! Run orchestration: time loop, postprocessing and output files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{CaseConfig, ExactSolution};
use super::setup::{build_case, CaseSetup};
use crate::error::{Error, Result};
use crate::ipcs::{RunSummary, StepRecord};
use crate::post::{
    error_norms, grid_fields, grid_wall_shear, observed_order, sample_line, write_probe_csv, ErrorReport, PolyData,
    WallShear,
};
use crate::{lit, Real, Vec3};

/// Bounds on `√ΔS_mean / h` outside which a warning is issued.
pub const AREA_RATIO_BAND: (f64, f64) = (0.1, 2.5);

pub const RUN_LOG_HEADER: &str = "step,time_s,nrmse_x,nrmse_y,nrmse_z,enforcement_corrected_m_per_s,\
enforcement_final_m_per_s,div_star_per_s,div_corrected_per_s,div_next_per_s,momentum_iterations,\
momentum_residual,poisson_iterations,poisson_residual";

fn log_line(r: &StepRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.step,
        r.time,
        r.nrmse[0],
        r.nrmse[1],
        r.nrmse[2],
        r.enforcement_corrected,
        r.enforcement_final,
        r.div_star,
        r.div_corrected,
        r.div_next,
        r.momentum_iterations.iter().sum::<usize>(),
        r.momentum_residual,
        r.poisson_iterations,
        r.poisson_residual
    )
}

/// Comparison with the configured exact solution.
#[derive(Debug, Clone, Serialize)]
pub struct ExactComparison {
    pub norms: ErrorReport,
    /// Largest computed velocity component along the tube axis.
    pub u_max_computed: f64,
    pub u_max_exact: f64,
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct CaseRun<T: Real> {
    pub config: CaseConfig,
    pub setup: CaseSetup<T>,
    pub records: Vec<StepRecord>,
    pub summary: RunSummary,
    pub exact: Option<ExactComparison>,
    pub wall_shear: Option<WallShear<T>>,
    pub output_dir: Option<PathBuf>,
}

/// Short machine-readable run summary written as `summary.json`.
#[derive(Debug, Clone, Serialize)]
struct SummaryFile<'a> {
    name: &'a str,
    version: &'a str,
    steps: usize,
    time_s: f64,
    steady: bool,
    active_nodes: usize,
    full_box_nodes: usize,
    lagrangian_points: usize,
    wss_mean_pa: Option<f64>,
}

pub fn version_stamp() -> String {
    format!("ibflow {}", env!("CARGO_PKG_VERSION"))
}

/// Compares the numerical velocity with the exact solution over the active
/// nodes strictly inside the tube.
pub fn compare_exact<T: Real>(setup: &CaseSetup<T>, exact: &ExactSolution) -> Result<ExactComparison> {
    let ExactSolution::Poiseuille(tube) = exact;
    let grid = setup.stepper.grid();
    let u = &setup.stepper.state.u_n;
    let axis = Vec3::from(tube.axis_direction).normalize();
    let mut num = Vec::new();
    let mut ex = Vec::new();
    let mut u_max = f64::NEG_INFINITY;
    for a in 0..grid.n_active() {
        let x = grid.coord(a);
        let v = Vec3::new(u[a][0].as_f64(), u[a][1].as_f64(), u[a][2].as_f64());
        u_max = u_max.max(v.dot(&axis));
        if tube.contains(&x) {
            num.push(v);
            ex.push(tube.velocity(&Vec3::new(x[0].as_f64(), x[1].as_f64(), x[2].as_f64())));
        }
    }
    Ok(ExactComparison {
        norms: error_norms(&num, &ex)?,
        u_max_computed: u_max,
        u_max_exact: tube.u_max(),
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(format!("cannot serialise: {e}")))?;
    write_text(path, &text)
}

fn write_grid_fields<T: Real>(setup: &CaseSetup<T>, path: &Path, title: &str) -> Result<()> {
    let s = &setup.stepper;
    grid_fields(s.grid(), &s.state.u_n, &s.state.p_n)?.write(path, title)
}

/// Builds the case, marches it and postprocesses. With an output directory
/// the resolved config, version stamp, run log, fields, surface data, probes
/// and error report are written there.
pub fn run_case<T: Real>(cfg: &CaseConfig, output_dir: Option<&Path>) -> Result<CaseRun<T>> {
    cfg.validate()?;
    if let Some(dir) = output_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_text(&dir.join("config.toml"), &cfg.to_toml_string()?)?;
        write_text(&dir.join("VERSION"), &format!("{}\n", version_stamp()))?;
    }
    let mut setup = build_case::<T>(cfg)?;
    if let Some(cloud) = &setup.cloud {
        let ratio = cloud.mean_area().as_f64().sqrt() / cfg.domain.h_m;
        if ratio < AREA_RATIO_BAND.0 || ratio > AREA_RATIO_BAND.1 {
            log::warn!(
                "sqrt(mean area)/h = {ratio:.2} is outside [{}, {}]",
                AREA_RATIO_BAND.0,
                AREA_RATIO_BAND.1
            );
        }
    }

    let mut log = match output_dir {
        Some(dir) => {
            let path = dir.join("run_log.csv");
            let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = BufWriter::new(f);
            writeln!(w, "{RUN_LOG_HEADER}").map_err(|e| Error::io(&path, e))?;
            Some((w, path))
        }
        None => None,
    };
    let mut records = Vec::new();
    let mut io_error: Option<Error> = None;
    let every = cfg.output.log_every;
    let snapshot = cfg.output.snapshot_every;
    let name = cfg.name.clone();
    let started = std::time::Instant::now();
    let summary = setup.stepper.run(&cfg.time, cfg.features.monitor, |rec, stepper| {
        records.push(rec.clone());
        if rec.step % 100 == 0 {
            log::info!(
                "step {} t = {:.4} s, NRMSE {:.2e}/{:.2e}/{:.2e} ({:.1} s elapsed)",
                rec.step,
                rec.time,
                rec.nrmse[0],
                rec.nrmse[1],
                rec.nrmse[2],
                started.elapsed().as_secs_f64()
            );
        }
        if let Some((w, path)) = log.as_mut() {
            if rec.step % every == 0 || rec.step == 1 {
                if let Err(e) = writeln!(w, "{}", log_line(rec)) {
                    io_error = Some(Error::io(path.clone(), e));
                    return false;
                }
            }
        }
        if let (Some(dir), Some(k)) = (output_dir, snapshot) {
            if rec.step % k == 0 {
                let path = dir.join(format!("fields_{:06}.vtk", rec.step));
                let r = grid_fields(stepper.grid(), &stepper.state.u_n, &stepper.state.p_n)
                    .and_then(|f| f.write(&path, &format!("{name} step {}", rec.step)));
                if let Err(e) = r {
                    io_error = Some(e);
                    return false;
                }
            }
        }
        true
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    if let Some((mut w, path)) = log {
        if let Some(last) = &summary.last {
            if last.step % every != 0 && last.step != 1 {
                writeln!(w, "{}", log_line(last)).map_err(|e| Error::io(&path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    log::info!(
        "{}: {} steps to t = {:.4} s, steady = {}",
        cfg.name,
        summary.steps,
        summary.time,
        summary.steady
    );

    let exact = cfg.exact.as_ref().map(|e| compare_exact(&setup, e)).transpose()?;
    let wall_shear = match (&setup.cloud, cfg.output.wall_shear_stress) {
        (Some(cloud), true) => Some(grid_wall_shear(
            setup.stepper.grid(),
            &setup.stepper.state.u_n,
            &cloud.points,
            &cloud.normals,
            lit(cfg.fluid.mu),
            lit(cfg.domain.h_m),
        )?),
        _ => None,
    };

    if let Some(dir) = output_dir {
        if cfg.output.fields {
            write_grid_fields(&setup, &dir.join("fields.vtk"), &cfg.name)?;
            if let Some(cloud) = &setup.cloud {
                let mut pd = PolyData::from_points(&cloud.points);
                pd.add_vector("normal", &cloud.normals);
                pd.add_scalar("area_m2", &cloud.areas);
                let ib = setup
                    .stepper
                    .immersed_boundary()
                    .expect("cloud implies immersed boundary");
                let coupling = ib.system.coupling();
                pd.add_vector("velocity", &coupling.interpolate(&setup.stepper.state.u_n));
                if let Some(ws) = &wall_shear {
                    pd.add_scalar("wss_pa", &ws.field.magnitude);
                    pd.add_vector("wall_traction_pa", &ws.field.tangential);
                }
                pd.write(&dir.join("surface.vtk"), &cfg.name)?;
            }
        }
        for probe in &cfg.output.probes {
            let s = &setup.stepper;
            let samples = sample_line(
                s.grid(),
                &s.state.u_n,
                &s.state.p_n,
                probe.start_m,
                probe.end_m,
                probe.samples,
            )?;
            write_probe_csv(&samples, &dir.join(format!("probe_{}.csv", probe.name)))?;
        }
        if let Some(ex) = &exact {
            write_json(&dir.join("error_report.json"), ex)?;
        }
        let wss_mean = wall_shear.as_ref().map(|w| {
            let m = &w.field.magnitude;
            m.iter().map(|v| v.as_f64()).sum::<f64>() / m.len().max(1) as f64
        });
        let version = version_stamp();
        write_json(
            &dir.join("summary.json"),
            &SummaryFile {
                name: &cfg.name,
                version: &version,
                steps: summary.steps,
                time_s: summary.time,
                steady: summary.steady,
                active_nodes: setup.stepper.grid().n_active(),
                full_box_nodes: setup.full_grid.n_active(),
                lagrangian_points: setup.cloud.as_ref().map_or(0, |c| c.len()),
                wss_mean_pa: wss_mean,
            },
        )?;
    }
    Ok(CaseRun {
        config: cfg.clone(),
        setup,
        records,
        summary,
        exact,
        wall_shear,
        output_dir: output_dir.map(Path::to_path_buf),
    })
}

/// Norms at one resolution of a convergence study.
#[derive(Debug, Clone, Serialize)]
pub struct StudyRow {
    pub h_m: f64,
    pub l_inf: f64,
    pub l_2: f64,
    pub u_max_computed: f64,
    pub steps: usize,
    pub steady: bool,
}

/// Observed orders between consecutive resolutions.
#[derive(Debug, Clone, Serialize)]
pub struct StudyOrder {
    pub h_coarse_m: f64,
    pub h_fine_m: f64,
    pub order_l_inf: f64,
    pub order_l_2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    pub orders: Vec<StudyOrder>,
}

/// Checks a list of resolutions: non-empty, positive, no repeats. Returns
/// them sorted coarse to fine.
pub fn validate_resolutions(resolutions: &[f64]) -> Result<Vec<f64>> {
    if resolutions.is_empty() {
        return Err(Error::Config("convergence study needs at least one resolution".into()));
    }
    let mut hs = resolutions.to_vec();
    if let Some(h) = hs.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
        return Err(Error::Config(format!("resolution {h} is not a positive length")));
    }
    hs.sort_by(|a, b| b.total_cmp(a));
    if let Some(w) = hs.windows(2).find(|w| (w[0] - w[1]).abs() <= 1e-12 * w[0]) {
        return Err(Error::Config(format!("resolution {} is listed more than once", w[0])));
    }
    Ok(hs)
}

/// Runs `cfg` at each resolution (Lagrangian spacing following h) and
/// tabulates the norms and observed orders. Each run writes into
/// `output_dir/h_<h>` when a directory is given.
pub fn convergence_study<T: Real>(
    cfg: &CaseConfig,
    resolutions: &[f64],
    output_dir: Option<&Path>,
) -> Result<StudyReport> {
    let hs = validate_resolutions(resolutions)?;
    if cfg.exact.is_none() {
        return Err(Error::Config(
            "convergence study needs an exact solution in the config".into(),
        ));
    }
    let mut rows = Vec::with_capacity(hs.len());
    for &h in &hs {
        let mut c = cfg.clone();
        c.domain.h_m = h;
        c.lagrangian.target_ds_m = None;
        c.name = format!("{}-h{h:e}", cfg.name);
        let dir = output_dir.map(|d| d.join(format!("h_{h:e}")));
        let run = run_case::<T>(&c, dir.as_deref())?;
        let ex = run.exact.expect("exact solution configured");
        rows.push(StudyRow {
            h_m: h,
            l_inf: ex.norms.l_inf,
            l_2: ex.norms.l_2,
            u_max_computed: ex.u_max_computed,
            steps: run.summary.steps,
            steady: run.summary.steady,
        });
    }
    let orders = rows
        .windows(2)
        .map(|w| StudyOrder {
            h_coarse_m: w[0].h_m,
            h_fine_m: w[1].h_m,
            order_l_inf: observed_order(w[0].l_inf, w[1].l_inf, w[0].h_m, w[1].h_m),
            order_l_2: observed_order(w[0].l_2, w[1].l_2, w[0].h_m, w[1].h_m),
        })
        .collect();
    let report = StudyReport { rows, orders };
    if let Some(dir) = output_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_json(&dir.join("study.json"), &report)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::super::presets::poiseuille;
    use super::*;

    #[test]
    fn log_line_matches_the_header() {
        let r = StepRecord {
            step: 3,
            time: 0.5,
            nrmse: [1.0, 2.0, 3.0],
            enforcement_corrected: 0.0,
            enforcement_final: 0.0,
            div_star: 1.0,
            div_corrected: 1.0,
            div_next: 0.0,
            momentum_iterations: [1, 2, 3],
            momentum_residual: 0.0,
            poisson_iterations: 1,
            poisson_residual: 0.0,
        };
        let line = log_line(&r);
        assert_eq!(line.split(',').count(), RUN_LOG_HEADER.split(',').count());
        assert!(line.starts_with("3,0.5,1,2,3,"));
        // momentum iterations are summed over the components
        assert_eq!(line.split(',').nth(10), Some("6"));
    }

    #[test]
    fn exact_field_compares_with_zero_error() {
        let cfg = poiseuille(1e-3, 1.0);
        let mut setup = build_case::<f64>(&cfg).unwrap();
        let ExactSolution::Poiseuille(tube) = cfg.exact.clone().unwrap();
        let g = setup.stepper.grid().clone();
        setup.stepper.state.u_n = g.sample_vector(|x| tube.velocity(x));
        let c = compare_exact(&setup, cfg.exact.as_ref().unwrap()).unwrap();
        assert_eq!(c.norms.l_inf, 0.0);
        assert_eq!(c.norms.l_2, 0.0);
        // the axis is a lattice line, so the peak is sampled exactly
        assert!((c.u_max_computed - c.u_max_exact).abs() <= 1e-15);
        assert!((c.u_max_exact - 20.0 * 0.005f64.powi(2) / (4.0 * 0.00345)).abs() < 1e-15);
    }

    #[test]
    fn resolutions_sort_coarse_to_fine() {
        assert_eq!(
            validate_resolutions(&[2.5e-4, 1e-3, 5e-4]).unwrap(),
            [1e-3, 5e-4, 2.5e-4]
        );
        let e = validate_resolutions(&[1e-3, 5e-4, 1e-3]).unwrap_err();
        assert!(e.to_string().contains("listed more than once"));
        assert!(validate_resolutions(&[f64::NAN]).is_err());
        assert!(validate_resolutions(&[0.0]).is_err());
    }
}
