use std::fs;

use ibflow::case::{
    convergence_study, preset, run_case, validate_resolutions, CaseConfig, GeometryConfig, RUN_LOG_HEADER,
};
use ibflow::post::{PolyData, StructuredPoints, PROBE_HEADER};
use ibflow::surface::shapes::icosphere;
use ibflow::surface::write_stl;
use ibflow::{Error, Vec3};

fn short_lid() -> CaseConfig {
    let mut cfg = preset("lid-driven").unwrap();
    cfg.time.max_steps = 5;
    cfg.output.log_every = 2;
    cfg.output.snapshot_every = Some(4);
    cfg
}

#[test]
fn lid_driven_run_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_lid();
    let run = run_case::<f64>(&cfg, Some(dir.path())).unwrap();
    assert_eq!(run.summary.steps, 5);
    assert_eq!(run.records.len(), 5);
    assert!(run.exact.is_none() && run.wall_shear.is_none());

    let log = fs::read_to_string(dir.path().join("run_log.csv")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines[0], RUN_LOG_HEADER);
    // steps 1, 2, 4 and the final step 5
    let steps: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(steps, ["1", "2", "4", "5"]);

    let resolved = CaseConfig::load(&dir.path().join("config.toml")).unwrap();
    assert_eq!(resolved, cfg);
    assert!(fs::read_to_string(dir.path().join("VERSION"))
        .unwrap()
        .starts_with("ibflow "));

    let fields = StructuredPoints::read(&dir.path().join("fields.vtk")).unwrap();
    assert_eq!(fields.dims, [11, 11, 11]);
    let u = fields.data.vector("velocity").unwrap();
    let st = &run.setup.stepper;
    for (a, v) in st.state.u_n.iter().enumerate() {
        let g = st.grid().active_to_global(a);
        assert_eq!(u[g], [v[0], v[1], v[2]]);
    }
    assert!(dir.path().join("fields_000004.vtk").exists());

    let probe = fs::read_to_string(dir.path().join("probe_vertical-centerline.csv")).unwrap();
    assert_eq!(probe.lines().next().unwrap(), PROBE_HEADER);
    assert_eq!(probe.lines().count(), 12);

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["name"], "lid-driven");
    assert_eq!(summary["steps"], 5);
}

#[test]
fn lid_drives_flow_in_its_own_direction() {
    let run = run_case::<f64>(&short_lid(), None).unwrap();
    let st = &run.setup.stepper;
    let g = st.grid();
    // nodes one cell under the lid move with it
    let top = g.dims()[1] - 2;
    let mean: f64 = (0..g.n_active())
        .filter(|&a| g.active_ijk(a)[1] == top)
        .map(|a| st.state.u_n[a][0])
        .sum();
    assert!(mean > 0.0);
    // without a pressure boundary only the compatible part of the
    // divergence can be projected out, so it shrinks but does not vanish
    for r in &run.records {
        assert!(
            r.div_next <= r.div_star,
            "step {}: {:e} -> {:e}",
            r.step,
            r.div_star,
            r.div_next
        );
    }
}

#[test]
fn study_rejects_bad_resolution_lists() {
    let cfg = preset("poiseuille-coarse").unwrap();
    let dup = convergence_study::<f64>(&cfg, &[1e-3, 1e-3], None).unwrap_err();
    assert!(dup.to_string().contains("listed more than once"), "{dup}");
    assert!(validate_resolutions(&[]).is_err());
    assert!(validate_resolutions(&[1e-3, -1e-3]).is_err());
    assert_eq!(validate_resolutions(&[5e-4, 1e-3]).unwrap(), [1e-3, 5e-4]);
    let no_exact = convergence_study::<f64>(&short_lid(), &[1e-3, 5e-4], None).unwrap_err();
    assert!(matches!(no_exact, Error::Config(_)), "{no_exact}");
}

#[test]
fn surface_file_case_crops_around_a_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let sphere = icosphere(Vec3::new(0.5, 0.5, 0.5), 0.3, 3);
    write_stl(&sphere, &dir.path().join("ball.stl"), false).unwrap();
    let text = r#"
name = "ball"

[domain]
min_m = [0.0, 0.0, 0.0]
max_m = [1.0, 1.0, 1.0]
h_m = 0.05

[geometry]
type = "file"
path = "ball.stl"

[lagrangian]
target_ds_m = 0.05

[fluid]
density_kg_per_m3 = 1.0
viscosity_pa_s = 0.1

[time]
dt_s = 0.01
t_end_s = 0.03
max_steps = 3
"#;
    let cfg_path = dir.path().join("ball.toml");
    fs::write(&cfg_path, text).unwrap();
    let cfg = CaseConfig::load(&cfg_path).unwrap();
    assert!(matches!(&cfg.geometry, GeometryConfig::File { path } if path.is_absolute()));
    let run = run_case::<f64>(&cfg, Some(&dir.path().join("out"))).unwrap();
    let crop = run.setup.crop.unwrap();
    assert!(crop.active_after < crop.active_before);
    assert!(crop.inside_fraction_after() > crop.inside_fraction_before());
    // a closed wall at rest in a fluid at rest stays at rest
    let worst = run.setup.stepper.state.u_n.iter().map(|u| u.norm()).fold(0.0, f64::max);
    assert!(worst < 1e-12, "{worst}");
    let surf = PolyData::read(&dir.path().join("out/surface.vtk")).unwrap();
    assert_eq!(surf.points.len(), run.setup.cloud.as_ref().unwrap().len());
    assert!(surf.data.scalar("wss_pa").is_some());
}

#[test]
fn bad_config_file_reports_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    fs::write(&p, "name = \"x\"\n[domain]\nmin_m = [0, 0, 0]\n").unwrap();
    let e = CaseConfig::load(&p).unwrap_err();
    assert!(e.to_string().contains("bad.toml"), "{e}");
    assert_eq!(e.exit_code(), 1);
}
