//! First-order ALE finite-volume scheme on a periodic moving 1D grid with
//! simultaneous integration of the cell Jacobians.

use crate::error::{Error, Result};
use crate::fluxes::TwoPointFlux;
use crate::mesh::MeshMotion;
use crate::physics::EntropySystem;
use crate::rk::RkScheme;

/// Periodic grid of K cells; interface k is the left edge of cell k.
#[derive(Debug, Clone, PartialEq)]
pub struct FvGrid {
    pub motion: MeshMotion,
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FvState<const P: usize> {
    pub u: Vec<[f64; P]>,
    /// J_k = dx_k / 2
    pub jac: Vec<f64>,
    pub t: f64,
}

impl FvGrid {
    pub fn uniform(cells: usize, motion: MeshMotion) -> Result<Self> {
        if cells < 2 {
            return Err(Error::config("the periodic finite-volume grid needs at least 2 cells"));
        }
        let dx = motion.length() / cells as f64;
        Ok(FvGrid { motion, x0: (0..cells).map(|k| motion.x_min + k as f64 * dx).collect() })
    }

    pub fn cells(&self) -> usize {
        self.x0.len()
    }

    pub fn interface_position(&self, k: usize, t: f64) -> f64 {
        let kk = self.cells();
        if k == kk {
            self.motion.position_1d(self.x0[0], t) + self.motion.length()
        } else {
            self.motion.position_1d(self.x0[k], t)
        }
    }

    pub fn interface_velocity(&self, k: usize, t: f64) -> f64 {
        self.motion.velocity_1d(self.x0[k % self.cells()], t)
    }

    /// Exact geometric Jacobians dx_k(t)/2.
    pub fn exact_jacobians(&self, t: f64) -> Vec<f64> {
        (0..self.cells())
            .map(|k| 0.5 * (self.interface_position(k + 1, t) - self.interface_position(k, t)))
            .collect()
    }

    pub fn cell_centers(&self, t: f64) -> Vec<f64> {
        (0..self.cells())
            .map(|k| 0.5 * (self.interface_position(k + 1, t) + self.interface_position(k, t)))
            .collect()
    }

    /// State with cell means sampled at the cell centers at time t.
    pub fn init<const P: usize>(&self, t: f64, f: impl Fn(f64) -> [f64; P]) -> FvState<P> {
        FvState { u: self.cell_centers(t).into_iter().map(f).collect(), jac: self.exact_jacobians(t), t }
    }
}

/// Time derivatives (dJ/dt, d(Ju)/dt) of every cell.
pub fn fv_rhs<const P: usize, F: TwoPointFlux<P>>(
    grid: &FvGrid,
    state: &FvState<P>,
    flux: &F,
    t: f64,
) -> Result<(Vec<f64>, Vec<[f64; P]>)> {
    let kk = grid.cells();
    if state.u.len() != kk || state.jac.len() != kk {
        return Err(Error::config("state size does not match the grid"));
    }
    for (k, u) in state.u.iter().enumerate() {
        flux.system().check(u).map_err(|e| e.context(format!("cell {k}, t={t}")))?;
    }
    let mut nu = vec![0.0; kk];
    let mut g = vec![[0.0; P]; kk];
    for i in 0..kk {
        let v = grid.interface_velocity(i, t);
        let nv = [v, 0.0, 0.0];
        nu[i] = v;
        g[i] = flux.es_flux(&nv, &nv, &state.u[(i + kk - 1) % kk], &state.u[i], 0);
    }
    let mut dj = vec![0.0; kk];
    let mut dju = vec![[0.0; P]; kk];
    for k in 0..kk {
        let r = (k + 1) % kk;
        dj[k] = 0.5 * (nu[r] - nu[k]);
        for c in 0..P {
            dju[k][c] = -0.5 * (g[r][c] - g[k][c]);
        }
    }
    Ok((dj, dju))
}

/// One explicit RK step; stage Jacobians come first, the conserved update
/// divides by the stage Jacobian.
pub fn fv_rk_step<const P: usize, F: TwoPointFlux<P>>(
    grid: &FvGrid,
    state: &FvState<P>,
    flux: &F,
    scheme: &RkScheme,
    dt: f64,
) -> Result<FvState<P>> {
    if !(dt > 0.0) {
        return Err(Error::time_step(format!("time step must be positive, got {dt}")));
    }
    let kk = grid.cells();
    let s = scheme.stages();
    let t = state.t;
    let mut dj_st: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut dju_st: Vec<Vec<[f64; P]>> = Vec::with_capacity(s);
    let combine = |coef: &[f64], dj_st: &[Vec<f64>], dju_st: &[Vec<[f64; P]>]| -> Result<FvState<P>> {
        let mut jac = state.jac.clone();
        let mut u = state.u.clone();
        for k in 0..kk {
            let mut acc = [0.0; P];
            for (sg, &a) in coef.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                jac[k] += dt * a * dj_st[sg][k];
                for c in 0..P {
                    acc[c] += a * (dju_st[sg][k][c] - dj_st[sg][k] * state.u[k][c]);
                }
            }
            if !(jac[k] > 0.0) {
                return Err(Error::time_step(format!(
                    "nonpositive stage Jacobian {} in cell {k} at t={t}; reduce the time step",
                    jac[k]
                )));
            }
            for c in 0..P {
                u[k][c] += dt / jac[k] * acc[c];
            }
        }
        Ok(FvState { u, jac, t })
    };
    for tau in 0..s {
        let mut stage = combine(&scheme.a[tau], &dj_st, &dju_st)?;
        stage.t = t + scheme.c[tau] * dt;
        let (dj, dju) = fv_rhs(grid, &stage, flux, stage.t)?;
        dj_st.push(dj);
        dju_st.push(dju);
    }
    let mut next = combine(&scheme.b, &dj_st, &dju_st)?;
    next.t = t + dt;
    Ok(next)
}

pub fn total_entropy<const P: usize, S: EntropySystem<P>>(sys: &S, state: &FvState<P>) -> f64 {
    state.u.iter().zip(&state.jac).map(|(u, j)| j * sys.entropy(u).s).sum()
}

pub fn total_mass<const P: usize>(state: &FvState<P>) -> f64 {
    state.u.iter().zip(&state.jac).map(|(u, j)| j * u[0]).sum()
}

/// d/dt sum_k J_k s(u_k) from the semi-discrete right-hand side:
/// sum_k w_k^T d(J u)_k/dt - phi_k dJ_k/dt.
pub fn entropy_rate<const P: usize, F: TwoPointFlux<P>>(grid: &FvGrid, state: &FvState<P>, flux: &F) -> Result<f64> {
    let (dj, dju) = fv_rhs(grid, state, flux, state.t)?;
    let mut r = 0.0;
    for k in 0..grid.cells() {
        let b = flux.system().entropy(&state.u[k]);
        r += (0..P).map(|c| b.w[c] * dju[k][c]).sum::<f64>() - b.phi * dj[k];
    }
    Ok(r)
}

/// Time series sample of a finite-volume run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FvSample {
    pub t: f64,
    pub total_entropy: f64,
    pub mass: f64,
    pub freestream_linf: f64,
}

/// Advance to `t_end` with `steps` equal steps, sampling every `every` steps.
/// `reference` is the constant state used for the free-stream deviation.
#[allow(clippy::too_many_arguments)]
pub fn fv_run<const P: usize, F: TwoPointFlux<P>>(
    grid: &FvGrid,
    mut state: FvState<P>,
    flux: &F,
    scheme: &RkScheme,
    t_end: f64,
    steps: usize,
    every: usize,
    reference: Option<[f64; P]>,
) -> Result<(FvState<P>, Vec<FvSample>)> {
    if steps == 0 {
        return Err(Error::config("number of steps must be positive"));
    }
    let dt = (t_end - state.t) / steps as f64;
    let sample = |s: &FvState<P>| FvSample {
        t: s.t,
        total_entropy: total_entropy(flux.system(), s),
        mass: total_mass(s),
        freestream_linf: reference.map_or(0.0, |r| {
            s.u.iter().flat_map(|u| (0..P).map(move |c| (u[c] - r[c]).abs())).fold(0.0, f64::max)
        }),
    };
    let mut out = vec![sample(&state)];
    for n in 0..steps {
        state = fv_rk_step(grid, &state, flux, scheme, dt)?;
        if n + 1 == steps {
            state.t = t_end;
        }
        if (n + 1) % every.max(1) == 0 || n + 1 == steps {
            out.push(sample(&state));
        }
    }
    Ok((state, out))
}
