//! C ABI over the alesolve library.
//!
//! Every function returns an [`AlesolveStatus`]; on failure the message is
//! kept per thread and can be read with [`alesolve_last_error_message`].
//! Handles are opaque and must be released with their `_free` function.
//! Panics never cross the boundary.

use alesolve::dgsem::{DgSolver, FieldState};
use alesolve::diagnostics::discrete_entropy;
use alesolve::operators::OperatorSet;
use alesolve::rk::RkScheme;
use alesolve::scenarios::{RunConfig, Scenario};
use alesolve::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlesolveStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    State = 3,
    Geometry = 4,
    TimeStep = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Nodal operators of one polynomial degree.
pub struct AlesolveOperators {
    ops: OperatorSet,
}

/// A DG solver together with its current field.
pub struct AlesolveSolver {
    solver: DgSolver,
    state: FieldState,
    scheme: RkScheme,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> AlesolveStatus {
    match e {
        Error::Config(_) => AlesolveStatus::Config,
        Error::State(_) => AlesolveStatus::State,
        Error::Geometry(_) => AlesolveStatus::Geometry,
        Error::TimeStep(_) => AlesolveStatus::TimeStep,
        Error::Io(_) => AlesolveStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), AlesolveStatus>) -> AlesolveStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AlesolveStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            AlesolveStatus::Panic
        }
    }
}

fn lift<T>(r: alesolve::Result<T>) -> Result<T, AlesolveStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null(what: &str) -> AlesolveStatus {
    set_error(format!("{what} is null"));
    AlesolveStatus::NullPointer
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, AlesolveStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        AlesolveStatus::Config
    })
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), AlesolveStatus> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if len < src.len() {
        set_error(format!("buffer holds {len} values, {} needed", src.len()));
        return Err(AlesolveStatus::BufferTooSmall);
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Copy the last error message of this thread into `buf` (NUL terminated,
/// truncated to `len - 1` bytes). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn alesolve_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn alesolve_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Build the operators of degree `n` (1..=15).
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn alesolve_operators_new(n: usize, out: *mut *mut AlesolveOperators) -> AlesolveStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ops = lift(OperatorSet::new(n))?;
        *out = Box::into_raw(Box::new(AlesolveOperators { ops }));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`alesolve_operators_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn alesolve_operators_free(h: *mut AlesolveOperators) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Node count N + 1.
///
/// # Safety
/// `h` must be a live operators handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn alesolve_operators_num_nodes(h: *const AlesolveOperators, out: *mut usize) -> AlesolveStatus {
    guard(|| {
        let (Some(h), false) = (h.as_ref(), out.is_null()) else { return Err(null("handle or out")) };
        *out = h.ops.num_nodes();
        Ok(())
    })
}

/// Copy the nodes and weights (N + 1 values each).
///
/// # Safety
/// `nodes` and `weights` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn alesolve_operators_nodes_weights(
    h: *const AlesolveOperators,
    nodes: *mut f64,
    weights: *mut f64,
    len: usize,
) -> AlesolveStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        copy_out(h.ops.nodes(), nodes, len)?;
        copy_out(h.ops.weights(), weights, len)
    })
}

/// Copy the derivative matrix, row major, (N + 1)^2 values.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn alesolve_operators_derivative(h: *const AlesolveOperators, out: *mut f64, len: usize) -> AlesolveStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        copy_out(h.ops.derivative_matrix(), out, len)
    })
}

/// max |Q + Q^T - B|.
///
/// # Safety
/// `h` must be a live operators handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn alesolve_operators_sbp_residual(h: *const AlesolveOperators, out: *mut f64) -> AlesolveStatus {
    guard(|| {
        let (Some(h), false) = (h.as_ref(), out.is_null()) else { return Err(null("handle or out")) };
        *out = h.ops.sbp_residual();
        Ok(())
    })
}

/// Create a solver for one (degree, elements) pair of a DG run
/// configuration (JSON text, same format as the command line) and
/// initialize it with the scenario's initial data.
///
/// # Safety
/// `config_json` must be a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn alesolve_solver_new(
    config_json: *const c_char,
    degree: usize,
    elements: usize,
    out: *mut *mut AlesolveSolver,
) -> AlesolveStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = lift(RunConfig::from_json(read_str(config_json, "config_json")?))?;
        if !matches!(cfg.scenario, Scenario::Convergence | Scenario::Tgv | Scenario::Freestream | Scenario::Robustness) {
            set_error(format!("{} is not a DG scenario", cfg.scenario.name()));
            return Err(AlesolveStatus::Config);
        }
        let solver = lift(cfg.solver(degree, elements))?;
        let state = lift(cfg.initial(&solver))?;
        *out = Box::into_raw(Box::new(AlesolveSolver { solver, state, scheme: RkScheme::new(cfg.scheme) }));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`alesolve_solver_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn alesolve_solver_free(h: *mut AlesolveSolver) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Total number of nodes; the state holds 5 values per node.
///
/// # Safety
/// `h` must be a live solver handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn alesolve_solver_num_nodes(h: *const AlesolveSolver, out: *mut usize) -> AlesolveStatus {
    guard(|| {
        let (Some(h), false) = (h.as_ref(), out.is_null()) else { return Err(null("handle or out")) };
        *out = h.state.u.len();
        Ok(())
    })
}

/// Current simulation time.
///
/// # Safety
/// `h` must be a live solver handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn alesolve_solver_time(h: *const AlesolveSolver, out: *mut f64) -> AlesolveStatus {
    guard(|| {
        let (Some(h), false) = (h.as_ref(), out.is_null()) else { return Err(null("handle or out")) };
        *out = h.state.t;
        Ok(())
    })
}

/// Stable time step for the current state at the given CFL number.
///
/// # Safety
/// `h` must be a live solver handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn alesolve_solver_stable_dt(h: *const AlesolveSolver, cfl: f64, out: *mut f64) -> AlesolveStatus {
    guard(|| {
        let (Some(h), false) = (h.as_ref(), out.is_null()) else { return Err(null("handle or out")) };
        *out = lift(h.solver.compute_dt(&h.state, cfl, f64::INFINITY))?;
        Ok(())
    })
}

/// Advance `steps` steps of size `dt`. On failure the state is left at the
/// last completed step.
///
/// # Safety
/// `h` must be a live solver handle.
#[no_mangle]
pub unsafe extern "C" fn alesolve_solver_step(h: *mut AlesolveSolver, dt: f64, steps: usize) -> AlesolveStatus {
    guard(|| {
        let h = h.as_mut().ok_or_else(|| null("handle"))?;
        for _ in 0..steps {
            h.state = lift(h.solver.rk_step(&h.state, &h.scheme, dt))?;
        }
        Ok(())
    })
}

/// Total discrete entropy of the current state.
///
/// # Safety
/// `h` must be a live solver handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn alesolve_solver_entropy(h: *const AlesolveSolver, out: *mut f64) -> AlesolveStatus {
    guard(|| {
        let (Some(h), false) = (h.as_ref(), out.is_null()) else { return Err(null("handle or out")) };
        *out = discrete_entropy(&h.solver, &h.state);
        Ok(())
    })
}

/// Copy the conserved state, 5 values per node, node-major.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn alesolve_solver_copy_state(h: *const AlesolveSolver, out: *mut f64, len: usize) -> AlesolveStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        let flat: Vec<f64> = h.state.u.iter().flatten().copied().collect();
        copy_out(&flat, out, len)
    })
}

/// Run a configuration (JSON text) and write its outputs into `output_dir`,
/// as `alesolve run` does. A run that completes but records a solver
/// failure returns [`AlesolveStatus::State`].
///
/// # Safety
/// Both arguments must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn alesolve_run_config(config_json: *const c_char, output_dir: *const c_char) -> AlesolveStatus {
    guard(|| {
        let cfg = lift(RunConfig::from_json(read_str(config_json, "config_json")?))?;
        let dir = read_str(output_dir, "output_dir")?;
        let code = lift(alesolve::cli::run_config(&cfg, Path::new(dir)))?;
        if code != alesolve::cli::EXIT_OK {
            set_error("the run recorded a solver failure");
            return Err(AlesolveStatus::State);
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::ptr;

    fn last_error() -> String {
        let mut buf = vec![0 as c_char; 256];
        unsafe {
            alesolve_last_error_message(buf.as_mut_ptr(), buf.len());
            CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
        }
    }

    #[test]
    fn operators_round_trip() {
        unsafe {
            let mut h = ptr::null_mut();
            assert_eq!(alesolve_operators_new(2, &mut h), AlesolveStatus::Ok);
            let mut m = 0;
            assert_eq!(alesolve_operators_num_nodes(h, &mut m), AlesolveStatus::Ok);
            assert_eq!(m, 3);
            let (mut x, mut w) = ([0.0; 3], [0.0; 3]);
            assert_eq!(alesolve_operators_nodes_weights(h, x.as_mut_ptr(), w.as_mut_ptr(), 3), AlesolveStatus::Ok);
            assert_eq!(x[1], 0.0);
            assert!((w[1] - 4.0 / 3.0).abs() < 1e-15);
            let mut d = [0.0; 9];
            assert_eq!(alesolve_operators_derivative(h, d.as_mut_ptr(), 8), AlesolveStatus::BufferTooSmall);
            assert_eq!(alesolve_operators_derivative(h, d.as_mut_ptr(), 9), AlesolveStatus::Ok);
            assert!((d[0] + 1.5).abs() < 1e-14);
            let mut r = 1.0;
            assert_eq!(alesolve_operators_sbp_residual(h, &mut r), AlesolveStatus::Ok);
            assert!(r < 1e-14);
            alesolve_operators_free(h);
        }
    }

    #[test]
    fn errors_are_reported() {
        unsafe {
            let mut h = ptr::null_mut();
            assert_eq!(alesolve_operators_new(0, &mut h), AlesolveStatus::Config);
            assert!(h.is_null());
            assert!(last_error().contains("degree"), "{}", last_error());
            assert_eq!(alesolve_operators_new(3, ptr::null_mut()), AlesolveStatus::NullPointer);
            let mut m = 0;
            assert_eq!(alesolve_operators_num_nodes(ptr::null(), &mut m), AlesolveStatus::NullPointer);
            let bad = CString::new(r#"{"scenario": "tgv", "bogus": 1}"#).unwrap();
            let mut s = ptr::null_mut();
            assert_eq!(alesolve_solver_new(bad.as_ptr(), 3, 2, &mut s), AlesolveStatus::Config);
            let fv = CString::new(r#"{"scenario": "fv1d"}"#).unwrap();
            assert_eq!(alesolve_solver_new(fv.as_ptr(), 3, 2, &mut s), AlesolveStatus::Config);
            alesolve_solver_free(ptr::null_mut());
            alesolve_operators_free(ptr::null_mut());
            // message length is reported even for a tiny buffer
            let mut one = [1 as c_char; 1];
            assert!(alesolve_last_error_message(one.as_mut_ptr(), 1) > 0);
            assert_eq!(one[0], 0);
        }
    }

    #[test]
    fn solver_free_stream() {
        let cfg = CString::new(r#"{"scenario": "freestream", "amplitude": 0.05, "dissipation": "roe"}"#).unwrap();
        unsafe {
            let mut s = ptr::null_mut();
            assert_eq!(alesolve_solver_new(cfg.as_ptr(), 2, 2, &mut s), AlesolveStatus::Ok);
            let mut n = 0;
            assert_eq!(alesolve_solver_num_nodes(s, &mut n), AlesolveStatus::Ok);
            assert_eq!(n, 8 * 27);
            let mut dt = 0.0;
            assert_eq!(alesolve_solver_stable_dt(s, 0.5, &mut dt), AlesolveStatus::Ok);
            assert!(dt > 0.0);
            assert_eq!(alesolve_solver_step(s, dt, 5), AlesolveStatus::Ok);
            let mut t = 0.0;
            assert_eq!(alesolve_solver_time(s, &mut t), AlesolveStatus::Ok);
            assert!((t - 5.0 * dt).abs() < 1e-14);
            let mut u = vec![0.0; 5 * n];
            assert_eq!(alesolve_solver_copy_state(s, u.as_mut_ptr(), u.len()), AlesolveStatus::Ok);
            let free = [1.0, 0.3, 0.0, 0.0, 17.0];
            for (i, v) in u.iter().enumerate() {
                assert!((v - free[i % 5]).abs() < 1e-12);
            }
            let mut e = 0.0;
            assert_eq!(alesolve_solver_entropy(s, &mut e), AlesolveStatus::Ok);
            assert!(e.is_finite());
            assert_eq!(alesolve_solver_step(s, -1.0, 1), AlesolveStatus::TimeStep);
            alesolve_solver_free(s);
        }
    }

    #[test]
    fn run_config_writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = CString::new(r#"{"scenario": "check-operators", "degrees": [1, 2, 3]}"#).unwrap();
        let out = CString::new(dir.path().to_str().unwrap()).unwrap();
        unsafe {
            assert_eq!(alesolve_run_config(cfg.as_ptr(), out.as_ptr()), AlesolveStatus::Ok);
            assert_eq!(alesolve_run_config(ptr::null(), out.as_ptr()), AlesolveStatus::NullPointer);
        }
        let text = std::fs::read_to_string(dir.path().join("operators.csv")).unwrap();
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn version_string() {
        let v = unsafe { CStr::from_ptr(alesolve_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
