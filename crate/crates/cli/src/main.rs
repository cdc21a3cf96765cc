//! Command-line front end: run a case, run a convergence study, inspect a
//! surface, or print a built-in preset.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ibflow::case::{convergence_study, preset, run_case, CaseConfig, PRESET_NAMES};
use ibflow::surface::{facet_stats, load_surface, resample_uniform, DEFAULT_SEED};
use ibflow::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "ibflow",
    version,
    about = "Cartesian-grid immersed-boundary flow solver for internal flows"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "IBFLOW_THREADS")]
    threads: Option<usize>,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "info")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CaseSource {
    /// Case file (TOML).
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in case instead of a file.
    #[arg(long)]
    preset: Option<String>,
}

impl CaseSource {
    fn load(&self) -> Result<CaseConfig> {
        match (&self.config, &self.preset) {
            (Some(p), _) => CaseConfig::load(p),
            (None, Some(name)) => preset(name),
            (None, None) => Err(Error::Config("a case file or --preset is required".into())),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// March a case to steady state or its end time and write the outputs.
    Run {
        #[command(flatten)]
        source: CaseSource,
        /// Output directory (default: ./out/<case name>).
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run a case at several resolutions and report observed orders.
    Study {
        #[command(flatten)]
        source: CaseSource,
        /// Grid spacings in metres, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        resolutions: Vec<f64>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Validate a closed STL or OBJ surface and report its facet statistics.
    CheckSurface {
        surface: PathBuf,
        /// Also resample at this spacing (m) and report the point count.
        #[arg(long)]
        ds: Option<f64>,
    },
    /// Print a built-in case as TOML.
    ShowPreset {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
        name: String,
    },
}

fn output_dir(given: &Option<PathBuf>, cfg: &CaseConfig) -> PathBuf {
    given.clone().unwrap_or_else(|| Path::new("out").join(&cfg.name))
}

fn check_surface(path: &Path, ds: Option<f64>) -> Result<()> {
    let s = load_surface::<f64>(path)?;
    let st = facet_stats(&s);
    let (lo, hi) = s.bounding_box();
    println!("surface: {}", path.display());
    println!("facets: {}", st.n_facets);
    println!("closed: true");
    println!("area_m2: {:e}", s.total_area());
    println!("volume_m3: {:e}", s.signed_volume());
    println!("bbox_min_m: {} {} {}", lo[0], lo[1], lo[2]);
    println!("bbox_max_m: {} {} {}", hi[0], hi[1], hi[2]);
    println!("edge_mean_m: {:e} (std {:e})", st.edge_mean, st.edge_std);
    println!("area_mean_m2: {:e} (std {:e})", st.area_mean, st.area_std);
    if let Some(ds) = ds {
        let c = resample_uniform(&s, ds, DEFAULT_SEED)?;
        println!("points_at_ds: {}", c.len());
        println!("sqrt_mean_area_over_ds: {:.3}", c.mean_area().sqrt() / ds);
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            source,
            output_dir: dir,
        } => {
            let cfg = source.load()?;
            let dir = output_dir(&dir, &cfg);
            let run = run_case::<f64>(&cfg, Some(&dir))?;
            println!(
                "{}: {} steps, t = {:.4} s, steady = {}",
                cfg.name, run.summary.steps, run.summary.time, run.summary.steady
            );
            if let Some(ex) = &run.exact {
                println!(
                    "L_inf = {:.4e} m/s, L_2 = {:.4e}, U_max = {:.5} m/s (exact {:.5})",
                    ex.norms.l_inf, ex.norms.l_2, ex.u_max_computed, ex.u_max_exact
                );
            }
            println!("outputs in {}", dir.display());
            Ok(())
        }
        Command::Study {
            source,
            resolutions,
            output_dir: dir,
        } => {
            let cfg = source.load()?;
            let dir = output_dir(&dir, &cfg).join("study");
            let report = convergence_study::<f64>(&cfg, &resolutions, Some(&dir))?;
            println!("h_m,l_inf,l_2,u_max,steps,steady");
            for r in &report.rows {
                println!(
                    "{},{:e},{:e},{},{},{}",
                    r.h_m, r.l_inf, r.l_2, r.u_max_computed, r.steps, r.steady
                );
            }
            for o in &report.orders {
                println!(
                    "order {} -> {}: L_inf {:.3}, L_2 {:.3}",
                    o.h_coarse_m, o.h_fine_m, o.order_l_inf, o.order_l_2
                );
            }
            Ok(())
        }
        Command::CheckSurface { surface, ds } => check_surface(&surface, ds),
        Command::ShowPreset { name } => {
            print!("{}", preset(&name)?.to_toml_string()?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
