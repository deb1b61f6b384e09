//! Command-line front end: argument parsing, output files and exit codes.

use crate::diagnostics::eoc;
use crate::error::{Error, Result};
use crate::scenarios::{self, DgRun, RunConfig, Scenario};
use clap::{Parser, Subcommand};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "alesolve", version, about = "Entropy-stable moving-mesh solvers for the Euler and shallow water equations")]
pub struct Cli {
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the scenario described by a JSON configuration file
    Run {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
    },
    /// Run the quick self-check suite
    Check {
        /// also write check.csv here
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

/// Parse `args` (including the program name), run, and return the exit
/// code. Messages go to stdout and stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let pool = match cli.workers {
        Some(0) => {
            eprintln!("error: --workers must be at least 1");
            return EXIT_CONFIG;
        }
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_FAILURE;
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Run { config, output_dir } => run_file(config, output_dir),
        Command::Check { output_dir } => check(output_dir.as_deref()),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_file(config: &Path, out: &Path) -> Result<i32> {
    let text = fs::read_to_string(config).map_err(|e| Error::config(format!("cannot read {}: {e}", config.display())))?;
    let cfg = RunConfig::from_json(&text)?;
    run_config(&cfg, out)
}

/// Run a validated configuration and write its outputs into `out`.
pub fn run_config(cfg: &RunConfig, out: &Path) -> Result<i32> {
    fs::create_dir_all(out).map_err(|e| Error::Io(format!("cannot create {}: {e}", out.display())))?;
    let header = format!("# alesolve {} {}\n", env!("CARGO_PKG_VERSION"), cfg.to_json());
    let write = |name: &str, body: String| -> Result<()> {
        let path = out.join(name);
        fs::write(&path, format!("{header}{body}")).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
    };
    match cfg.scenario {
        Scenario::Convergence | Scenario::Tgv | Scenario::Freestream | Scenario::Robustness => {
            let runs = scenarios::run_dg(cfg)?;
            write("runs.csv", runs_csv(&runs))?;
            if matches!(cfg.scenario, Scenario::Tgv | Scenario::Robustness) {
                write("history.csv", history_csv(&runs))?;
            }
            if cfg.scenario == Scenario::Convergence {
                write("convergence.csv", convergence_csv(&runs))?;
            }
            let meshes: Vec<_> = runs.iter().map(|r| &r.mesh).collect();
            let json = serde_json::to_string_pretty(&meshes).map_err(|e| Error::Io(e.to_string()))?;
            let path = out.join("mesh.json");
            fs::write(&path, json + "\n").map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?;
            let mut code = EXIT_OK;
            for r in &runs {
                match &r.failure {
                    Some(msg) => {
                        eprintln!("run N={} K={} CFL={} failed at t={}: {msg}", r.degree, r.elements, r.cfl, r.t_reached);
                        code = EXIT_FAILURE;
                    }
                    None => println!("run N={} K={} CFL={} reached t={} in {} steps", r.degree, r.elements, r.cfl, r.t_reached, r.steps),
                }
            }
            Ok(code)
        }
        Scenario::Fv1d => {
            let rows = scenarios::run_fv1d(cfg)?;
            let mut s = String::from("steps,dt,entropy_initial,entropy_final,delta_entropy,mass_drift,freestream_linf\n");
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{},{:e},{:e},{:e},{:e},{:e},{:e}",
                    r.steps,
                    r.dt,
                    r.entropy_initial,
                    r.entropy_final,
                    r.entropy_final - r.entropy_initial,
                    r.mass_drift,
                    r.freestream_linf
                );
            }
            write("fv1d.csv", s)?;
            println!("fv1d: {} runs", rows.len());
            Ok(EXIT_OK)
        }
        Scenario::CheckOperators => {
            let rows = scenarios::run_check_operators(cfg)?;
            let mut s = String::from("degree,sbp_residual,quadrature_residual,row_sum_residual\n");
            for r in &rows {
                let _ = writeln!(s, "{},{:e},{:e},{:e}", r.degree, r.sbp_residual, r.quadrature_residual, r.row_sum_residual);
            }
            write("operators.csv", s)?;
            Ok(EXIT_OK)
        }
        Scenario::CheckMesh => {
            let rows = scenarios::run_check_mesh(cfg)?;
            let mut s = String::from("degree,elements,t,metric_identity,watertight\n");
            for r in &rows {
                let _ = writeln!(s, "{},{},{:e},{:e},{:e}", r.degree, r.elements, r.t, r.metric_identity, r.watertight);
            }
            write("mesh_checks.csv", s)?;
            Ok(EXIT_OK)
        }
        Scenario::CheckFluxes => {
            let rows = scenarios::run_check_fluxes(cfg)?;
            let mut s = String::from("variant,samples,tadmor_residual,symmetry_residual,spd_min_eig,eigen_scaling_residual\n");
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{},{},{:e},{:e},{:e},{:e}",
                    r.variant.name(),
                    r.samples,
                    r.tadmor_residual,
                    r.symmetry_residual,
                    r.spd_min_eig,
                    r.eigen_scaling_residual
                );
            }
            write("fluxes.csv", s)?;
            Ok(EXIT_OK)
        }
    }
}

fn runs_csv(runs: &[DgRun]) -> String {
    let mut s = String::from("degree,elements,cfl,dt,steps,t_reached,delta_entropy,freestream_linf,status\n");
    for r in runs {
        let _ = writeln!(
            s,
            "{},{},{:e},{:e},{},{:e},{:e},{:e},{}",
            r.degree,
            r.elements,
            r.cfl,
            r.dt,
            r.steps,
            r.t_reached,
            r.record.entropy_error(r.t_reached),
            r.freestream_linf,
            if r.failure.is_some() { "failed" } else { "ok" }
        );
    }
    s
}

fn history_csv(runs: &[DgRun]) -> String {
    let mut s = String::from("degree,elements,cfl,t,entropy,delta_entropy,mass,momentum_1,momentum_2,momentum_3,energy\n");
    for r in runs {
        let s0 = r.record.samples.first().map_or(0.0, |x| x.entropy);
        for x in &r.record.samples {
            let _ = write!(s, "{},{},{:e},{:e},{:e},{:e}", r.degree, r.elements, r.cfl, x.t, x.entropy, x.entropy - s0);
            for v in x.totals {
                let _ = write!(s, ",{v:e}");
            }
            s.push('\n');
        }
    }
    s
}

const VARS: [&str; 5] = ["rho", "rho_u1", "rho_u2", "rho_u3", "energy"];

fn convergence_csv(runs: &[DgRun]) -> String {
    let mut s = String::from("degree,elements,cfl,dt,steps");
    for p in ["l2", "linf", "eoc"] {
        for v in VARS {
            let _ = write!(s, ",{p}_{v}");
        }
    }
    s.push('\n');
    for (i, r) in runs.iter().enumerate() {
        let Some(err) = r.errors else { continue };
        // previous run with the same degree and CFL number
        let prev = runs[..i].iter().rev().find(|p| p.degree == r.degree && p.cfl == r.cfl && p.errors.is_some());
        let _ = write!(s, "{},{},{:e},{:e},{}", r.degree, r.elements, r.cfl, r.dt, r.steps);
        for e in err {
            let _ = write!(s, ",{:e}", e.0);
        }
        for e in err {
            let _ = write!(s, ",{:e}", e.1);
        }
        for k in 0..5 {
            let rate = prev.and_then(|p| eoc(&[(p.elements, p.errors.unwrap()[k].0), (r.elements, err[k].0)])[0]);
            match rate {
                Some(v) => {
                    let _ = write!(s, ",{v:.4}");
                }
                None => s.push(','),
            }
        }
        s.push('\n');
    }
    s
}

fn check(out: Option<&Path>) -> Result<i32> {
    let lines = scenarios::check_suite()?;
    let mut csv = String::from("check,value,threshold,bound,status\n");
    let mut all = true;
    for l in &lines {
        let status = if l.passed() { "PASS" } else { "FAIL" };
        all &= l.passed();
        let bound = if l.upper_bound { "max" } else { "min" };
        println!("{status} {} = {:e} ({bound} {:e})", l.name, l.value, l.threshold);
        let _ = writeln!(csv, "{},{:e},{:e},{bound},{status}", l.name, l.value, l.threshold);
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join("check.csv");
        fs::write(&path, csv).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(if all { EXIT_OK } else { EXIT_FAILURE })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(main_with_args(["alesolve"]), EXIT_CONFIG);
        assert_eq!(main_with_args(["alesolve", "frobnicate"]), EXIT_CONFIG);
        assert_eq!(main_with_args(["alesolve", "--workers", "0", "check"]), EXIT_CONFIG);
        assert_eq!(main_with_args(["alesolve", "run", "/nonexistent/config.json"]), EXIT_CONFIG);
        assert_eq!(main_with_args(["alesolve", "--help"]), EXIT_OK);
    }

    #[test]
    fn convergence_csv_rates() {
        let mut cfg = RunConfig::new(Scenario::Convergence);
        cfg.elements = vec![1, 2];
        cfg.degrees = vec![2];
        cfg.t_end = 0.05;
        cfg.output_interval = 0.05;
        cfg.dissipation = crate::fluxes::Dissipation::Roe;
        let runs = scenarios::run_dg(&cfg).unwrap();
        let csv = convergence_csv(&runs);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].split(',').count(), 20);
        assert!(lines[1].ends_with(",,,,,"));
        assert!(!lines[2].ends_with(','));
    }
}
