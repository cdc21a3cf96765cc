//! Acceptance checks: one PASS/FAIL line per criterion. Runs every case to
//! completion, so expect roughly twenty minutes on a single core.

use std::process::ExitCode;
use std::time::Instant;

use ibflow::case::{preset, run_case, CaseConfig, ExactSolution, GeometryConfig};
use ibflow::grid::{BoxDomain, EulerianGrid};
use ibflow::ibforce::{assemble_a, ForceSystem};
use ibflow::ipcs::StepRecord;
use ibflow::kernel::{build_coupling_points, delta_1d};
use ibflow::linsolve::DEFAULT_DENSE_CAP;
use ibflow::post::{observed_order, sample_line};
use ibflow::{Run, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn report(id: usize, name: &str, v: &Verdict) {
    println!("{} {id:>2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
}

fn run(name: &str) -> (CaseConfig, Run) {
    let cfg = preset(name).expect("preset");
    let t0 = Instant::now();
    let r = run_case::<f64>(&cfg, None).unwrap_or_else(|e| panic!("{name}: {e}"));
    eprintln!(
        "  {name}: {} steps, steady = {}, {:.0} s",
        r.summary.steps,
        r.summary.steady,
        t0.elapsed().as_secs_f64()
    );
    (cfg, r)
}

fn exact_tube(cfg: &CaseConfig) -> &ibflow::post::PoiseuilleTube {
    match cfg.exact.as_ref().expect("exact solution") {
        ExactSolution::Poiseuille(t) => t,
    }
}

/// Worst enforcement error after correction over all steps.
fn worst_enforcement(records: &[StepRecord]) -> f64 {
    records.iter().map(|r| r.enforcement_corrected).fold(0.0, f64::max)
}

/// Worst divergence reduction ratio over steps after the first.
fn worst_projection_ratio(records: &[StepRecord]) -> f64 {
    records
        .iter()
        .filter(|r| r.step > 1)
        .map(|r| if r.div_star > 0.0 { r.div_next / r.div_star } else { 0.0 })
        .fold(0.0, f64::max)
}

fn criterion_1(cfg: &CaseConfig, r: &Run) -> Verdict {
    let ex = r.exact.as_ref().expect("comparison");
    let last = r.summary.last.as_ref().expect("steps");
    let nrmse = last.nrmse.iter().copied().fold(0.0, f64::max);
    let pass = r.summary.steady && nrmse < 1e-8 && ex.norms.l_inf <= 3e-2 && ex.norms.l_2 <= 4e-4;
    verdict(
        pass,
        format!(
            "h = {:e} m, steady after {} steps (NRMSE {:.2e}), L_inf = {:.3e} m/s (<= 3e-2), L_2 = {:.3e} (<= 4e-4)",
            cfg.domain.h_m, r.summary.steps, nrmse, ex.norms.l_inf, ex.norms.l_2
        ),
    )
}

fn criterion_2(coarse: &Run, fine: &Run, h: (f64, f64)) -> Verdict {
    let (c, f) = (coarse.exact.as_ref().unwrap(), fine.exact.as_ref().unwrap());
    let o_inf = observed_order(c.norms.l_inf, f.norms.l_inf, h.0, h.1);
    let o_2 = observed_order(c.norms.l_2, f.norms.l_2, h.0, h.1);
    verdict(
        fine.summary.steady && o_inf >= 1.0 && o_2 >= 2.0,
        format!(
            "h {:e} -> {:e}: L_inf {:.3e} -> {:.3e} (order {:.2} >= 1.0), L_2 {:.3e} -> {:.3e} (order {:.2} >= 2.0)",
            h.0, h.1, c.norms.l_inf, f.norms.l_inf, o_inf, c.norms.l_2, f.norms.l_2, o_2
        ),
    )
}

fn criterion_3(low: &Run, high: &Run, fine: &Run) -> Verdict {
    let dev = |r: &Run, target: f64| (r.exact.as_ref().unwrap().u_max_computed - target).abs() / target;
    let (d1, d2) = (dev(low, 0.0362), dev(high, 0.0724));
    verdict(
        d1 <= 0.02 && d2 <= 0.02,
        format!(
            "U_max = {:.5} m/s vs 0.0362 ({:.1}%), {:.5} m/s vs 0.0724 ({:.1}%) at h = 1e-3; {:.5} m/s ({:.1}%) at h = 5e-4",
            low.exact.as_ref().unwrap().u_max_computed,
            100.0 * d1,
            high.exact.as_ref().unwrap().u_max_computed,
            100.0 * d2,
            fine.exact.as_ref().unwrap().u_max_computed,
            100.0 * dev(fine, 0.0362)
        ),
    )
}

fn criterion_4(runs: &[(&str, &Run, f64)]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, r, u_max) in runs {
        let worst = worst_enforcement(&r.records);
        pass &= !r.records.is_empty() && worst <= 1e-8 * u_max;
        parts.push(format!("{name} {worst:.1e} <= {:.1e}", 1e-8 * u_max));
    }
    verdict(
        pass,
        format!("max |interp(u) - U_B| after correction: {}", parts.join(", ")),
    )
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let (mut e0, mut e1, mut e2) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let r: f64 = rng.random_range(-4.0..4.0);
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for k in -8..=8 {
            let d = delta_1d(r - k as f64);
            s0 += d;
            s1 += (r - k as f64) * d;
            s2 += d * d;
        }
        e0 = e0.max((s0 - 1.0).abs());
        e1 = e1.max(s1.abs());
        e2 = e2.max((s2 - 0.375).abs());
    }
    verdict(
        e0 <= 1e-12 && e1 <= 1e-12 && e2 <= 1e-12,
        format!("1000 random r: |sum d - 1| {e0:.1e}, |sum r d| {e1:.1e}, |sum d^2 - 3/8| {e2:.1e} (all <= 1e-12)"),
    )
}

fn criterion_6() -> Verdict {
    let grid = EulerianGrid::build(BoxDomain::new(Vec3::zeros(), Vec3::new(10.0, 10.0, 10.0)).unwrap(), 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let x = Vec3::new(
        rng.random_range(4.0..6.0),
        rng.random_range(4.0..6.0),
        rng.random_range(4.0..6.0),
    );
    // direct summation of squared kernel weights over the lattice
    let mut direct = 0.0;
    for k in 0..11 {
        for j in 0..11 {
            for i in 0..11 {
                let w = delta_1d(x[0] - i as f64) * delta_1d(x[1] - j as f64) * delta_1d(x[2] - k as f64);
                direct += w * w;
            }
        }
    }
    let a_exact = 0.375f64.powi(3);
    let d = build_coupling_points(&grid, &[x]).unwrap();
    let a = assemble_a(&d, &[1.0], 1.0, 1.0, None).unwrap()[(0, 0)];
    let sys = ForceSystem::new(d, vec![1.0], 1.0, 1.0, None, DEFAULT_DENSE_CAP).unwrap();
    let f = sys.solve(&[Vec3::new(1.0, 0.0, 0.0)]).unwrap()[0][0];
    let rel = |v: f64, t: f64| ((v - t) / t).abs();
    let f_exact = 1.0 / a_exact;
    let pass = rel(a, a_exact) <= 1e-10 && rel(direct, a_exact) <= 1e-10 && rel(f, f_exact) <= 1e-10;
    verdict(
        pass,
        format!(
            "A = {a:.12} (direct sum {direct:.12}, exact {a_exact}), F = {f:.9} vs {f_exact:.9}, rel err {:.1e}",
            rel(f, f_exact).max(rel(a, a_exact))
        ),
    )
}

fn criterion_7(runs: &[(&str, &Run)]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, r) in runs {
        let worst = worst_projection_ratio(&r.records);
        pass &= worst <= 1e-2;
        parts.push(format!("{name} {worst:.1e}"));
    }
    verdict(
        pass,
        format!(
            "max ||div u^(n+1)|| / ||div u*|| after step 1 (<= 1e-2): {}",
            parts.join(", ")
        ),
    )
}

fn criterion_8(r: &Run) -> Verdict {
    let ws = r.wall_shear.as_ref().expect("wall shear");
    let ops = &ws.operators;
    let pts = &ws.samples;
    type Mono = (fn(&Vec3<f64>) -> f64, fn(&Vec3<f64>) -> Vec3<f64>);
    let monomials: [Mono; 10] = [
        (|_| 1.0, |_| Vec3::zeros()),
        (|x| x[0], |_| Vec3::new(1.0, 0.0, 0.0)),
        (|x| x[1], |_| Vec3::new(0.0, 1.0, 0.0)),
        (|x| x[2], |_| Vec3::new(0.0, 0.0, 1.0)),
        (|x| x[0] * x[0], |x| Vec3::new(2.0 * x[0], 0.0, 0.0)),
        (|x| x[1] * x[1], |x| Vec3::new(0.0, 2.0 * x[1], 0.0)),
        (|x| x[2] * x[2], |x| Vec3::new(0.0, 0.0, 2.0 * x[2])),
        (|x| x[0] * x[1], |x| Vec3::new(x[1], x[0], 0.0)),
        (|x| x[0] * x[2], |x| Vec3::new(x[2], 0.0, x[0])),
        (|x| x[1] * x[2], |x| Vec3::new(0.0, x[2], x[1])),
    ];
    let mut worst = 0.0f64;
    for (f, g) in monomials {
        let vals: Vec<f64> = pts.iter().map(f).collect();
        let grad = ops.gradient(&vals);
        for (k, &c) in ops.centers().iter().enumerate() {
            let exact = g(&pts[c]);
            let err = (grad[k] - exact).norm();
            // the constant has a zero gradient; judge it on the scale of 1/h
            let scale = if exact.norm() > 0.0 {
                exact.norm()
            } else {
                1.0 / ops.h_local()
            };
            worst = worst.max(err / scale);
        }
    }
    verdict(
        worst <= 1e-8,
        format!(
            "{} surface points, {} samples with collar: worst relative gradient error over 1, x, y, z and all quadratics {worst:.2e} (<= 1e-8)",
            ops.len(),
            pts.len()
        ),
    )
}

fn criterion_9(cfg: &CaseConfig, r: &Run) -> Verdict {
    let tube = exact_tube(cfg);
    let ws = r.wall_shear.as_ref().expect("wall shear");
    let cloud = r.setup.cloud.as_ref().expect("cloud");
    let (x0, x1) = match &cfg.geometry {
        GeometryConfig::Tube { start_m, end_m, .. } => (start_m[0], end_m[0]),
        _ => unreachable!("Poiseuille preset is a straight tube along x"),
    };
    let (lo, hi) = (x0 + 0.25 * (x1 - x0), x0 + 0.75 * (x1 - x0));
    let mid: Vec<f64> = cloud
        .points
        .iter()
        .zip(&ws.field.magnitude)
        .filter(|(p, _)| p[0] >= lo && p[0] <= hi)
        .map(|(_, &m)| m)
        .collect();
    let mean = mid.iter().sum::<f64>() / mid.len() as f64;
    let target = tube.wall_shear_stress();
    let dev = (mean - target).abs() / target;
    verdict(
        dev <= 0.1,
        format!(
            "mean |t_s| over {} mid-tube points = {mean:.4} Pa vs {target:.4} Pa ({:.1}%, <= 10%)",
            mid.len(),
            100.0 * dev
        ),
    )
}

fn criterion_10(cropped: &Run, full: &Run) -> Verdict {
    let gc = cropped.setup.stepper.grid();
    let gf = full.setup.stepper.grid();
    let uc = &cropped.setup.stepper.state.u_n;
    let uf = &full.setup.stepper.state.u_n;
    let mut diff = 0.0f64;
    for (a, u) in uc.iter().enumerate() {
        let b = gf
            .global_to_active(gc.active_to_global(a))
            .expect("full box holds every node");
        diff = diff.max((u - uf[b]).norm());
    }
    let u_max = full.exact.as_ref().unwrap().u_max_computed;
    let crop = cropped.setup.crop.expect("crop report");
    let (f0, f1) = (crop.inside_fraction_before(), crop.inside_fraction_after());
    verdict(
        diff <= 0.01 * u_max && f1 > f0,
        format!(
            "max |u_crop - u_full| = {diff:.3e} m/s vs 1% of U_max = {:.3e}; active {} -> {}, inside fraction {:.3} -> {:.3}",
            0.01 * u_max,
            crop.active_before,
            crop.active_after,
            f0,
            f1
        ),
    )
}

fn criterion_11(cfg: &CaseConfig, r: &Run) -> Verdict {
    let (outlet_y, x_probe, radius) = match &cfg.geometry {
        GeometryConfig::UBend {
            origin_m,
            inlet_length_m,
            bend_radius_m,
            radius_m,
            ..
        } => (
            origin_m[1] + inlet_length_m + bend_radius_m,
            origin_m[0] + bend_radius_m,
            *radius_m,
        ),
        _ => unreachable!("u-bend preset"),
    };
    let st = &r.setup.stepper;
    let line = sample_line(
        st.grid(),
        &st.state.u_n,
        &st.state.p_n,
        [x_probe, outlet_y - radius, 0.0],
        [x_probe, outlet_y + radius, 0.0],
        81,
    )
    .expect("probe");
    let best = line
        .iter()
        .filter(|s| s.u[0].is_finite())
        .max_by(|a, b| a.u[0].total_cmp(&b.u[0]))
        .expect("samples");
    let finite = r.records.last().is_some_and(|l| l.nrmse.iter().all(|v| v.is_finite()));
    verdict(
        finite && best.x[1] > outlet_y && best.u[0] > 0.0,
        format!(
            "{} steps to t = {:.3} s; max u_x = {:.4} m/s at y = {:.2} mm, outlet centre y = {:.2} mm (outer wall at larger y)",
            r.summary.steps,
            r.summary.time,
            best.u[0],
            1e3 * best.x[1],
            1e3 * outlet_y
        ),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut verdicts: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut emit = |id, name, v: Verdict| {
        report(id, name, &v);
        verdicts.push((id, name, v));
    };

    let (coarse_cfg, coarse) = run("poiseuille-coarse");
    emit(1, "Poiseuille accuracy", criterion_1(&coarse_cfg, &coarse));
    let (fine_cfg, fine) = run("poiseuille-fine");
    emit(
        2,
        "convergence order",
        criterion_2(&coarse, &fine, (coarse_cfg.domain.h_m, fine_cfg.domain.h_m)),
    );
    let (high_cfg, high) = run("poiseuille-re1102");
    emit(3, "peak velocity", criterion_3(&coarse, &high, &fine));
    let (full_cfg, full) = run("poiseuille-full-box");
    let (bend_cfg, bend) = run("u-bend");
    let u_bend_peak = match &bend_cfg.boundary.patches[0].kind {
        ibflow::ipcs::PatchKind::Velocity {
            profile: ibflow::ipcs::VelocityProfile::Parabolic { u_max_m_per_s },
            ..
        } => *u_max_m_per_s,
        _ => unreachable!("u-bend inlet is parabolic"),
    };
    emit(
        4,
        "boundary enforcement",
        criterion_4(&[
            ("coarse", &coarse, exact_tube(&coarse_cfg).u_max()),
            ("fine", &fine, exact_tube(&fine_cfg).u_max()),
            ("re1102", &high, exact_tube(&high_cfg).u_max()),
            ("full-box", &full, exact_tube(&full_cfg).u_max()),
            ("u-bend", &bend, u_bend_peak),
        ]),
    );
    emit(5, "kernel identities", criterion_5());
    emit(6, "single-point force", criterion_6());
    emit(
        7,
        "projection efficacy",
        criterion_7(&[
            ("coarse", &coarse),
            ("fine", &fine),
            ("re1102", &high),
            ("full-box", &full),
            ("u-bend", &bend),
        ]),
    );
    emit(8, "DC-PSE exactness", criterion_8(&coarse));
    emit(9, "wall shear stress", criterion_9(&coarse_cfg, &coarse));
    emit(10, "cropping fidelity", criterion_10(&coarse, &full));
    emit(11, "U-bend Dean skew", criterion_11(&bend_cfg, &bend));

    let failed: Vec<usize> = verdicts
        .iter()
        .filter(|(_, _, v)| !v.pass)
        .map(|(id, _, _)| *id)
        .collect();
    println!(
        "{} of {} criteria pass ({:.0} s)",
        verdicts.len() - failed.len(),
        verdicts.len(),
        started.elapsed().as_secs_f64()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failing: {failed:?}");
        ExitCode::FAILURE
    }
}
