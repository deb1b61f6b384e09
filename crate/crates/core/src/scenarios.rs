//! Run configurations and the scenario drivers used by the command line and
//! the test suites.

use crate::cases::{self, FREESTREAM};
use crate::dgsem::{DgSolver, FieldState};
use crate::diagnostics::{error_norms, mms_exact, mms_source, RunRecord};
use crate::error::{Error, Result};
use crate::fluxes::{check_tadmor, Dissipation, EcVariant, EulerFlux, FluxSpec, ShallowFlux, SystemKind, TadmorReport};
use crate::fv1d::{fv_run, total_entropy, FvGrid};
use crate::mesh::{metric_identity_residual, watertight_residual, MeshMotion, MeshSummary, MotionKind, MovingMesh};
use crate::operators::OperatorSet;
use crate::physics::{Euler, ShallowWater};
use crate::rk::{RkScheme, SchemeKind};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// manufactured solution on [-1, 1]^3, error norms and rates
    Convergence,
    /// Taylor-Green vortex entropy history
    Tgv,
    /// uniform flow on a moving mesh
    Freestream,
    /// Taylor-Green vortex run to completion or failure
    Robustness,
    /// one-dimensional moving finite volumes
    Fv1d,
    CheckOperators,
    CheckMesh,
    CheckFluxes,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Convergence => "convergence",
            Scenario::Tgv => "tgv",
            Scenario::Freestream => "freestream",
            Scenario::Robustness => "robustness",
            Scenario::Fv1d => "fv1d",
            Scenario::CheckOperators => "check-operators",
            Scenario::CheckMesh => "check-mesh",
            Scenario::CheckFluxes => "check-fluxes",
        }
    }

    fn is_dg(self) -> bool {
        matches!(self, Scenario::Convergence | Scenario::Tgv | Scenario::Freestream | Scenario::Robustness)
    }
}

fn d_degrees() -> Vec<usize> {
    vec![3]
}
fn d_elements() -> Vec<usize> {
    vec![4]
}
fn d_cfl() -> Vec<f64> {
    vec![0.5]
}
fn d_t_end() -> f64 {
    1.0
}
fn d_interval() -> f64 {
    0.1
}
fn d_variant() -> EcVariant {
    EcVariant::Chandrashekar
}
fn d_system() -> SystemKind {
    SystemKind::Euler
}
fn d_cells() -> usize {
    32
}
fn d_steps() -> Vec<usize> {
    vec![160, 320, 640, 1280]
}
fn d_times() -> Vec<f64> {
    vec![0.0, 0.13, 0.25, 0.4]
}
fn d_samples() -> usize {
    1000
}

/// Everything a run needs. Runs of the DG scenarios are the product
/// degrees x elements x cfl.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default = "d_degrees")]
    pub degrees: Vec<usize>,
    /// elements per direction
    #[serde(default = "d_elements")]
    pub elements: Vec<usize>,
    /// relative mesh displacement amplitude; 0 keeps the mesh at rest
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "d_variant")]
    pub variant: EcVariant,
    #[serde(default)]
    pub dissipation: Dissipation,
    #[serde(default = "d_cfl")]
    pub cfl: Vec<f64>,
    #[serde(default = "d_t_end")]
    pub t_end: f64,
    /// spacing of recorded samples
    #[serde(default = "d_interval")]
    pub output_interval: f64,
    #[serde(default)]
    pub scheme: SchemeKind,
    #[serde(default = "d_system")]
    pub system: SystemKind,
    #[serde(default = "d_cells")]
    pub cells: usize,
    /// step counts for the finite-volume refinement study
    #[serde(default = "d_steps")]
    pub steps: Vec<usize>,
    /// sample times for the mesh checks
    #[serde(default = "d_times")]
    pub times: Vec<f64>,
    #[serde(default = "d_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn new(scenario: Scenario) -> Self {
        RunConfig {
            scenario,
            degrees: d_degrees(),
            elements: d_elements(),
            amplitude: 0.0,
            variant: d_variant(),
            dissipation: Dissipation::None,
            cfl: d_cfl(),
            t_end: d_t_end(),
            output_interval: d_interval(),
            scheme: SchemeKind::default(),
            system: d_system(),
            cells: d_cells(),
            steps: d_steps(),
            times: d_times(),
            samples: d_samples(),
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::config(format!("invalid run configuration: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::config(m));
        if self.degrees.is_empty() || self.degrees.iter().any(|&n| !(1..=15).contains(&n)) {
            return bad(format!("degrees must be a nonempty list within 1..=15, got {:?}", self.degrees));
        }
        if self.elements.is_empty() || self.elements.contains(&0) {
            return bad(format!("elements must be a nonempty list of positive counts, got {:?}", self.elements));
        }
        if self.cfl.is_empty() || self.cfl.iter().any(|&c| !(c > 0.0 && c <= 1.0)) {
            return bad(format!("every CFL number must lie in (0, 1], got {:?}", self.cfl));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.output_interval > 0.0 && self.output_interval <= self.t_end) {
            return bad(format!("output_interval must lie in (0, t_end], got {}", self.output_interval));
        }
        if !(self.amplitude >= 0.0 && self.amplitude < 0.25) {
            return bad(format!("amplitude must lie in [0, 0.25), got {}", self.amplitude));
        }
        let system = if self.scenario == Scenario::Fv1d { self.system } else { SystemKind::Euler };
        if self.scenario != Scenario::CheckFluxes {
            FluxSpec { system, variant: self.variant, dissipation: self.dissipation }.validate()?;
        }
        if self.scenario == Scenario::Fv1d {
            if self.cells < 2 {
                return bad(format!("cells must be at least 2, got {}", self.cells));
            }
            if self.steps.is_empty() || self.steps.contains(&0) {
                return bad(format!("steps must be a nonempty list of positive counts, got {:?}", self.steps));
            }
        }
        if self.scenario == Scenario::CheckFluxes && self.samples == 0 {
            return bad("samples must be positive".into());
        }
        if self.times.iter().any(|t| !t.is_finite()) {
            return bad("times must be finite".into());
        }
        Ok(())
    }

    fn intervals(&self) -> usize {
        (self.t_end / self.output_interval).round().max(1.0) as usize
    }

    fn motion_kind(&self) -> MotionKind {
        if self.amplitude == 0.0 {
            MotionKind::Static
        } else {
            MotionKind::Sinusoidal
        }
    }

    /// Periodic box used by the DG scenarios.
    pub fn bounds(&self) -> (f64, f64) {
        match self.scenario {
            Scenario::Convergence => (-1.0, 1.0),
            Scenario::Fv1d => (0.0, 2.0),
            _ => (0.0, 2.0 * PI),
        }
    }

    /// DG solver for one (degree, elements) pair.
    pub fn solver(&self, n: usize, k: usize) -> Result<DgSolver> {
        let source = if self.scenario == Scenario::Convergence {
            let euler = Euler::default();
            Some(Arc::new(move |x: &[f64; 3], t: f64| mms_source(&euler, x, t)) as crate::dgsem::SourceFn)
        } else {
            None
        };
        cases::box_solver(k, n, self.bounds(), self.amplitude, self.variant, self.dissipation, source)
    }

    /// Initial field of the scenario on `solver`.
    pub fn initial(&self, solver: &DgSolver) -> Result<FieldState> {
        let e = *solver.euler();
        match self.scenario {
            Scenario::Convergence => solver.init(0.0, |x| mms_exact(x, 0.0)),
            Scenario::Freestream => solver.init(0.0, |_| FREESTREAM),
            _ => solver.init(0.0, |x| cases::tgv_initial(&e, x)),
        }
    }
}

/// One DG run: sampled history plus step data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DgRun {
    pub degree: usize,
    pub elements: usize,
    pub cfl: f64,
    /// mean step size, t_reached / steps
    pub dt: f64,
    pub steps: usize,
    pub record: RunRecord,
    /// time reached; equals t_end unless the run failed
    pub t_reached: f64,
    pub failure: Option<String>,
    /// max deviation from the initial uniform state over all steps
    /// (free-stream runs only)
    pub freestream_linf: f64,
    /// (L2, Linf) per conserved variable at t_end (convergence runs only)
    pub errors: Option<[(f64, f64); 5]>,
    pub mesh: MeshSummary,
}

fn dg_run(cfg: &RunConfig, n: usize, k: usize, cfl: f64) -> Result<DgRun> {
    let solver = cfg.solver(n, k)?;
    let scheme = RkScheme::new(cfg.scheme);
    let state = cfg.initial(&solver)?;
    let initial = state.u.clone();
    let mut record = RunRecord::default();
    record.push(&solver, &state);
    let mut freestream_linf: f64 = 0.0;
    let track = cfg.scenario == Scenario::Freestream;
    let mut last_t = state.t;
    let mut taken = 0;
    let outcome = solver.run_cfl(state, &scheme, cfl, cfg.t_end, cfg.intervals(), |st, at_output| {
        last_t = st.t;
        taken += 1;
        if track {
            for (u, u0) in st.u.iter().zip(&initial) {
                for c in 0..5 {
                    freestream_linf = freestream_linf.max((u[c] - u0[c]).abs());
                }
            }
        }
        if at_output {
            record.push(&solver, st);
        }
        Ok(())
    });
    let (t_reached, failure, errors) = match outcome {
        Ok((st, _)) => {
            let errors = if cfg.scenario == Scenario::Convergence {
                let t = st.t;
                Some(error_norms(&solver, &st, |x| mms_exact(x, t))?)
            } else {
                None
            };
            (st.t, None, errors)
        }
        Err(e @ Error::Config(_)) => return Err(e),
        Err(e) => (last_t, Some(e.to_string()), None),
    };
    Ok(DgRun {
        degree: n,
        elements: k,
        cfl,
        dt: if taken > 0 { t_reached / taken as f64 } else { 0.0 },
        steps: taken,
        record,
        t_reached,
        failure,
        freestream_linf,
        errors,
        mesh: solver.mesh.summary(),
    })
}

/// All DG runs of a configuration, in (degree, elements, cfl) order.
pub fn run_dg(cfg: &RunConfig) -> Result<Vec<DgRun>> {
    if !cfg.scenario.is_dg() {
        return Err(Error::config(format!("{} is not a DG scenario", cfg.scenario.name())));
    }
    let mut out = Vec::new();
    for &n in &cfg.degrees {
        for &k in &cfg.elements {
            for &c in &cfg.cfl {
                out.push(dg_run(cfg, n, k, c)?);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FvRow {
    pub steps: usize,
    pub dt: f64,
    pub entropy_initial: f64,
    pub entropy_final: f64,
    pub mass_drift: f64,
    pub freestream_linf: f64,
}

/// Smooth periodic Euler data on [0, 2].
pub fn fv_euler_wave(e: &Euler, x: f64) -> [f64; 5] {
    let (s, c) = (PI * x).sin_cos();
    e.conserved(1.0 + 0.5 * s, [0.5 + 0.3 * c, 0.0, 0.0], 1.0 + 0.3 * s)
}

/// Smooth periodic shallow-water data on [0, 2].
pub fn fv_shallow_wave(x: f64) -> [f64; 3] {
    let h = 1.0 + 0.3 * (PI * x).sin();
    [h, 0.5 * h, 0.0]
}

/// Finite-volume runs over the configured step counts.
pub fn run_fv1d(cfg: &RunConfig) -> Result<Vec<FvRow>> {
    let (lo, hi) = cfg.bounds();
    let grid = FvGrid::uniform(cfg.cells, MeshMotion::new(lo, hi, cfg.amplitude, cfg.motion_kind())?)?;
    let scheme = RkScheme::new(cfg.scheme);
    let mut rows = Vec::new();
    for &steps in &cfg.steps {
        let row = match cfg.system {
            SystemKind::Euler => {
                let e = Euler::default();
                let flux = EulerFlux::new(e, cfg.variant, cfg.dissipation)?;
                let st = grid.init(0.0, |x| fv_euler_wave(&e, x));
                let s0 = total_entropy(&e, &st);
                let (fin, samples) = fv_run(&grid, st, &flux, &scheme, cfg.t_end, steps, steps, None)?;
                let free = grid.init(0.0, |_| FREESTREAM);
                let (_, fs) = fv_run(&grid, free, &flux, &scheme, cfg.t_end, steps, 1, Some(FREESTREAM))?;
                fv_row(steps, cfg.t_end, s0, total_entropy(&e, &fin), &samples, &fs)
            }
            SystemKind::Shallow => {
                let s = ShallowWater::default();
                let flux = ShallowFlux::new(s, cfg.variant, cfg.dissipation)?;
                let st = grid.init(0.0, fv_shallow_wave);
                let s0 = total_entropy(&s, &st);
                let (fin, samples) = fv_run(&grid, st, &flux, &scheme, cfg.t_end, steps, steps, None)?;
                let rest = [1.0, 0.3, 0.0];
                let free = grid.init(0.0, |_| rest);
                let (_, fs) = fv_run(&grid, free, &flux, &scheme, cfg.t_end, steps, 1, Some(rest))?;
                fv_row(steps, cfg.t_end, s0, total_entropy(&s, &fin), &samples, &fs)
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

fn fv_row(steps: usize, t_end: f64, s0: f64, s1: f64, run: &[crate::fv1d::FvSample], free: &[crate::fv1d::FvSample]) -> FvRow {
    FvRow {
        steps,
        dt: t_end / steps as f64,
        entropy_initial: s0,
        entropy_final: s1,
        mass_drift: run.last().map_or(0.0, |l| l.mass - run[0].mass),
        freestream_linf: free.iter().map(|s| s.freestream_linf).fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatorRow {
    pub degree: usize,
    pub sbp_residual: f64,
    pub quadrature_residual: f64,
    pub row_sum_residual: f64,
}

pub fn run_check_operators(cfg: &RunConfig) -> Result<Vec<OperatorRow>> {
    cfg.degrees
        .iter()
        .map(|&n| {
            let ops = OperatorSet::new(n)?;
            Ok(OperatorRow {
                degree: n,
                sbp_residual: ops.sbp_residual(),
                quadrature_residual: ops.quadrature_residual(),
                row_sum_residual: ops.row_sum_residual(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshRow {
    pub degree: usize,
    pub elements: usize,
    pub t: f64,
    pub metric_identity: f64,
    pub watertight: f64,
}

pub fn run_check_mesh(cfg: &RunConfig) -> Result<Vec<MeshRow>> {
    let (lo, hi) = cfg.bounds();
    let motion = MeshMotion::new(lo, hi, cfg.amplitude, cfg.motion_kind())?;
    let mut rows = Vec::new();
    for &n in &cfg.degrees {
        for &k in &cfg.elements {
            let mesh = MovingMesh::new([k; 3], motion, OperatorSet::new(n)?)?;
            for &t in &cfg.times {
                let geoms = mesh.all_geometry(t)?;
                let metric_identity = geoms.iter().map(|g| metric_identity_residual(&mesh.ops, g)).fold(0.0, f64::max);
                let watertight = watertight_residual(&mesh, &geoms)?;
                rows.push(MeshRow { degree: n, elements: k, t, metric_identity, watertight });
            }
        }
    }
    Ok(rows)
}

/// Tadmor, symmetry and SPD checks for every flux variant.
pub fn run_check_fluxes(cfg: &RunConfig) -> Result<Vec<TadmorReport>> {
    EcVariant::ALL
        .iter()
        .map(|&v| {
            let diss = if cfg.dissipation.is_none() { Dissipation::Roe } else { cfg.dissipation };
            check_tadmor(&FluxSpec { system: v.system(), variant: v, dissipation: diss }, cfg.samples, cfg.seed)
        })
        .collect()
}

/// One line of the self-check suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// true when the value must stay at or below the threshold, false when
    /// it must exceed it (negative controls)
    pub upper_bound: bool,
}

impl CheckLine {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        CheckLine { name: name.into(), value, threshold, upper_bound: true }
    }
    fn above(name: &str, value: f64, threshold: f64) -> Self {
        CheckLine { name: name.into(), value, threshold, upper_bound: false }
    }
    pub fn passed(&self) -> bool {
        if self.upper_bound {
            self.value <= self.threshold
        } else {
            self.value > self.threshold
        }
    }
}

/// Fast consistency checks of every layer, each a few milliseconds to a
/// second on one core.
pub fn check_suite() -> Result<Vec<CheckLine>> {
    let mut out = Vec::new();
    let mut cfg = RunConfig::new(Scenario::CheckOperators);
    cfg.degrees = (1..=10).collect();
    let ops = run_check_operators(&cfg)?;
    out.push(CheckLine::at_most("sbp_residual", ops.iter().map(|r| r.sbp_residual).fold(0.0, f64::max), 1e-13));
    out.push(CheckLine::at_most("quadrature_residual", ops.iter().map(|r| r.quadrature_residual).fold(0.0, f64::max), 1e-12));

    let mut cfg = RunConfig::new(Scenario::CheckMesh);
    cfg.elements = vec![2];
    cfg.amplitude = cases::MOVING_AMPLITUDE;
    let mesh = run_check_mesh(&cfg)?;
    out.push(CheckLine::at_most("metric_identity", mesh.iter().map(|r| r.metric_identity).fold(0.0, f64::max), 1e-11));
    out.push(CheckLine::at_most("watertight", mesh.iter().map(|r| r.watertight).fold(0.0, f64::max), 1e-12));

    let mut cfg = RunConfig::new(Scenario::CheckFluxes);
    cfg.samples = 200;
    let fl = run_check_fluxes(&cfg)?;
    out.push(CheckLine::at_most("tadmor_residual", fl.iter().map(|r| r.tadmor_residual).fold(0.0, f64::max), 1e-11));
    out.push(CheckLine::at_most("flux_symmetry", fl.iter().map(|r| r.symmetry_residual).fold(0.0, f64::max), 0.0));
    out.push(CheckLine::at_most("eigen_scaling", fl.iter().map(|r| r.eigen_scaling_residual).fold(0.0, f64::max), 1e-10));
    out.push(CheckLine::above("dissipation_min_eig", fl.iter().map(|r| r.spd_min_eig).fold(f64::INFINITY, f64::min), -1e-12));

    for (name, diss) in [("face_entropy_ec", Dissipation::None), ("face_entropy_es", Dissipation::Roe)] {
        let solver = cases::tgv_solver(2, 3, cases::MOVING_AMPLITUDE, EcVariant::Chandrashekar, diss)?;
        let f = cases::random_field(&solver, 0.13, 7)?;
        out.push(CheckLine::at_most(name, crate::diagnostics::interior_face_entropy_residual(&solver, &f, true)?, 1e-11));
        if !diss.is_none() {
            // the probe must notice when the dissipation is left out
            let r = crate::diagnostics::interior_face_entropy_residual(&solver, &f, false)?;
            out.push(CheckLine::above("face_entropy_negative_control", r, 1e-8));
        }
    }

    let mut cfg = RunConfig::new(Scenario::Freestream);
    cfg.elements = vec![2];
    cfg.amplitude = cases::MOVING_AMPLITUDE;
    cfg.dissipation = Dissipation::Roe;
    cfg.t_end = 0.1;
    cfg.output_interval = 0.1;
    let fs = run_dg(&cfg)?;
    out.push(CheckLine::at_most("dg_freestream", fs[0].freestream_linf, 1e-11));

    let mut cfg = RunConfig::new(Scenario::Fv1d);
    cfg.amplitude = cases::MOVING_AMPLITUDE;
    cfg.steps = vec![100];
    let fv = run_fv1d(&cfg)?;
    out.push(CheckLine::at_most("fv_freestream", fv[0].freestream_linf, 1e-13));
    Ok(out)
}
