//! Split-form moving-mesh DGSEM for the 3D Euler equations: discrete GCL
//! and conservation-law right-hand sides and the RK-DGSEM time step.

use crate::error::{Error, Result};
use crate::fluxes::{entropy_jump, EulerFlux, TwoPointFlux};
use crate::mesh::{node_index, ElementGeometry, MovingMesh};
use crate::physics::{EntropySystem, Euler, EulerPrim};
use crate::rk::RkScheme;
use rayon::prelude::*;
use std::sync::{Arc, Mutex};

pub type State = [f64; 5];

/// Nodal conserved states and evolved Jacobians of every element, stored
/// element-major with node index i + m (j + m k).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub n: usize,
    pub u: Vec<State>,
    pub jac: Vec<f64>,
    pub t: f64,
}

impl FieldState {
    pub fn nodes_per_element(&self) -> usize {
        (self.n + 1).pow(3)
    }
    pub fn num_elements(&self) -> usize {
        self.u.len() / self.nodes_per_element()
    }
}

/// Nodal source term q(x, t) added to the conservation law.
pub type SourceFn = Arc<dyn Fn(&[f64; 3], f64) -> State + Send + Sync>;

/// Geometry of all elements at one time level. Face (e, axis) joins
/// element e (its upper face, the "-" side) with its upper neighbor (that
/// element's lower face).
#[derive(Debug, Clone)]
pub struct StageGeometry {
    pub t: f64,
    pub elems: Vec<ElementGeometry>,
}

pub struct DgSolver {
    pub mesh: MovingMesh,
    pub flux: EulerFlux,
    pub source: Option<SourceFn>,
    static_geometry: Option<Arc<StageGeometry>>,
    /// last moving-mesh geometry; the step size and the first stage of a
    /// step ask for the same time level
    recent: Mutex<Option<Arc<StageGeometry>>>,
    face_upper: [Vec<usize>; 3],
    face_lower: [Vec<usize>; 3],
}

#[inline]
fn face_slot(e: usize, axis: usize) -> usize {
    3 * e + axis
}

impl DgSolver {
    pub fn new(mesh: MovingMesh, flux: EulerFlux, source: Option<SourceFn>) -> Result<Self> {
        let m = mesh.ops.num_nodes();
        let proto = ElementGeometry {
            n: mesh.ops.degree(),
            x: vec![],
            nu: vec![],
            covariant: vec![],
            metric: vec![],
            jac: vec![],
        };
        let face_upper = [0, 1, 2].map(|a| proto.face_nodes(a, true));
        let face_lower = [0, 1, 2].map(|a| proto.face_nodes(a, false));
        debug_assert_eq!(face_upper[0].len(), m * m);
        let mut s = DgSolver { mesh, flux, source, static_geometry: None, recent: Mutex::new(None), face_upper, face_lower };
        if s.mesh.is_static() {
            s.static_geometry = Some(Arc::new(s.compute_geometry(0.0)?));
        }
        Ok(s)
    }

    pub fn euler(&self) -> &Euler {
        &self.flux.euler
    }

    fn compute_geometry(&self, t: f64) -> Result<StageGeometry> {
        Ok(StageGeometry { t, elems: self.mesh.all_geometry(t)? })
    }

    /// Geometry at time t. Static meshes compute it once; moving meshes
    /// keep the most recent time level.
    pub fn geometry(&self, t: f64) -> Result<Arc<StageGeometry>> {
        if let Some(g) = &self.static_geometry {
            return Ok(g.clone());
        }
        let lock = || self.recent.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(g) = lock().as_ref().filter(|g| g.t.to_bits() == t.to_bits()) {
            return Ok(g.clone());
        }
        // computed without holding the lock: the work runs on the pool
        let g = Arc::new(self.compute_geometry(t)?);
        *lock() = Some(g.clone());
        Ok(g)
    }

    /// Field initialized from pointwise data at the nodes, with geometric J.
    pub fn init(&self, t: f64, f: impl Fn(&[f64; 3]) -> State + Sync) -> Result<FieldState> {
        let geom = self.geometry(t)?;
        let mut u = Vec::with_capacity(self.mesh.num_elements() * self.mesh.nodes_per_element());
        let mut jac = Vec::with_capacity(u.capacity());
        for g in &geom.elems {
            for (x, j) in g.x.iter().zip(&g.jac) {
                let s = f(x);
                self.euler().check(&s)?;
                u.push(s);
                jac.push(*j);
            }
        }
        Ok(FieldState { n: self.mesh.ops.degree(), u, jac, t })
    }

    fn check_states(&self, u: &[State], t: f64) -> Result<Vec<EulerPrim>> {
        let np = self.mesh.nodes_per_element();
        let e = self.euler();
        u.par_iter()
            .enumerate()
            .map(|(q, s)| {
                e.check(s)
                    .map(|_| e.primitive(s))
                    .map_err(|err| err.context(format!("element {}, node {}, t={t}", q / np, q % np)))
            })
            .collect()
    }

    /// Discrete GCL right-hand side dJ/dt at every node.
    pub fn gcl_rhs(&self, geom: &StageGeometry) -> Vec<f64> {
        // a mesh at rest has identically zero GCL right-hand side
        if geom.elems.iter().all(|g| g.nu.iter().all(|v| *v == [0.0; 3])) {
            return vec![0.0; self.mesh.num_elements() * self.mesh.nodes_per_element()];
        }
        let ops = &self.mesh.ops;
        let m = ops.num_nodes();
        let np = m * m * m;
        let d = ops.derivative_matrix();
        let w = ops.weights();
        let (w0, wn) = (w[0], w[m - 1]);
        let mm = m * m;
        // face values nu~* = (s n) . {nu}
        let nustar: Vec<f64> = (0..self.mesh.num_elements() * 3)
            .into_par_iter()
            .flat_map_iter(|slot| {
                let (e, axis) = (slot / 3, slot % 3);
                let nb = self.mesh.neighbor(e, axis, true);
                let (gm, gp) = (&geom.elems[e], &geom.elems[nb]);
                (0..mm).map(move |q| {
                    let a = self.face_upper[axis][q];
                    let b = self.face_lower[axis][q];
                    let ja = gm.metric[a][axis];
                    0.5 * (ja[0] * (gm.nu[a][0] + gp.nu[b][0])
                        + ja[1] * (gm.nu[a][1] + gp.nu[b][1])
                        + ja[2] * (gm.nu[a][2] + gp.nu[b][2]))
                })
            })
            .collect();
        let mut out = vec![0.0; self.mesh.num_elements() * np];
        out.par_chunks_mut(np).enumerate().for_each(|(e, v)| {
            let g = &geom.elems[e];
            for dir in 0..3 {
                let stride = [1, m, mm][dir];
                for line in 0..mm {
                    let base = line_base(m, dir, line);
                    for i in 0..m {
                        let a = base + i * stride;
                        let mut acc = 0.0;
                        for k in 0..m {
                            let b = base + k * stride;
                            let ja = avg3(&g.metric[a][dir], &g.metric[b][dir]);
                            let nu = avg3(&g.nu[a], &g.nu[b]);
                            acc += d[i * m + k] * dot3(&ja, &nu);
                        }
                        v[a] += 2.0 * acc;
                    }
                }
            }
            for axis in 0..3 {
                let lower_nb = self.mesh.neighbor(e, axis, false);
                for q in 0..mm {
                    let a = self.face_upper[axis][q];
                    let own = dot3(&g.metric[a][axis], &g.nu[a]);
                    v[a] += (nustar[face_slot(e, axis) * mm + q] - own) / wn;
                    let b = self.face_lower[axis][q];
                    let own = dot3(&g.metric[b][axis], &g.nu[b]);
                    v[b] += (-nustar[face_slot(lower_nb, axis) * mm + q] + own) / w0;
                }
            }
        });
        out
    }

    /// Surface flux (s n) . G* in the direction from the "-" to the "+"
    /// state, where `sn` is the unnormalized normal s n.
    pub fn surface_flux(&self, sn: &[f64; 3], nul: &[f64; 3], nur: &[f64; 3], ul: &State, ur: &State) -> State {
        let e = self.euler();
        let (pa, pb) = (e.primitive(ul), e.primitive(ur));
        let mut g = self.flux.ec_normal_prim(&pa, &pb, nul, nur, sn);
        if !self.flux.dissipation.is_none() {
            let jw = entropy_jump(e, ul, ur);
            for l in 0..3 {
                if sn[l] != 0.0 {
                    let hj = self.flux.apply_dissipation(nul, nur, ul, ur, l, &jw);
                    for k in 0..5 {
                        g[k] -= 0.5 * sn[l].abs() * hj[k];
                    }
                }
            }
        }
        g
    }

    /// Quadratic surface dissipation 1/2 sum_l |s n_l| jump(w)^T H_l jump(w).
    pub fn surface_dissipation(&self, sn: &[f64; 3], nul: &[f64; 3], nur: &[f64; 3], ul: &State, ur: &State) -> f64 {
        if self.flux.dissipation.is_none() {
            return 0.0;
        }
        let jw = entropy_jump(self.euler(), ul, ur);
        let mut d = 0.0;
        for l in 0..3 {
            let hj = self.flux.apply_dissipation(nul, nur, ul, ur, l, &jw);
            d += 0.5 * sn[l].abs() * (0..5).map(|k| jw[k] * hj[k]).sum::<f64>();
        }
        d
    }

    /// Contravariant physical flux sum_l n_l (f_l(u) - nu_l u).
    #[inline]
    fn contravariant(&self, q: &EulerPrim, u: &State, nu: &[f64; 3], n: &[f64; 3]) -> State {
        let vn = dot3(&q.v, n) - dot3(nu, n);
        let un = dot3(&q.v, n);
        [
            u[0] * vn,
            u[1] * vn + q.p * n[0],
            u[2] * vn + q.p * n[1],
            u[3] * vn + q.p * n[2],
            u[4] * vn + q.p * un,
        ]
    }

    /// Split-form volume terms of one element, added into `r`.
    fn volume_terms(&self, g: &ElementGeometry, pe: &[EulerPrim], ue: &[State], d: &[f64], r: &mut [State]) {
        macro_rules! dispatch {
            ($($m:literal)*) => {
                match self.mesh.ops.num_nodes() {
                    $($m => self.volume_lines::<$m>(g, pe, ue, d, r),)*
                    m => self.volume_lines_dyn(m, g, pe, ue, d, r),
                }
            };
        }
        dispatch!(2 3 4 5 6 7 8 9 10 11 12 13 14 15 16)
    }

    fn volume_lines<const M: usize>(&self, g: &ElementGeometry, pe: &[EulerPrim], ue: &[State], d: &[f64], r: &mut [State]) {
        let dm: [[f64; M]; M] = std::array::from_fn(|i| std::array::from_fn(|j| 2.0 * d[i * M + j]));
        for dir in 0..3 {
            let stride = [1, M, M * M][dir];
            for line in 0..M * M {
                let base = line_base(M, dir, line);
                let idx: [usize; M] = std::array::from_fn(|i| base + i * stride);
                let n: [[f64; 3]; M] = std::array::from_fn(|i| g.metric[idx[i]][dir]);
                let nu: [[f64; 3]; M] = std::array::from_fn(|i| g.nu[idx[i]]);
                let p: [&EulerPrim; M] = std::array::from_fn(|i| &pe[idx[i]]);
                let mut acc = [[0.0; 5]; M];
                for i in 0..M {
                    let f = self.contravariant(p[i], &ue[idx[i]], &nu[i], &n[i]);
                    for k in 0..5 {
                        acc[i][k] -= dm[i][i] * f[k];
                    }
                    for j in (i + 1)..M {
                        let f = self.flux.ec_normal_prim(p[i], p[j], &nu[i], &nu[j], &avg3(&n[i], &n[j]));
                        for k in 0..5 {
                            acc[i][k] -= dm[i][j] * f[k];
                            acc[j][k] -= dm[j][i] * f[k];
                        }
                    }
                }
                for (i, a) in acc.iter().enumerate() {
                    for k in 0..5 {
                        r[idx[i]][k] += a[k];
                    }
                }
            }
        }
    }

    fn volume_lines_dyn(&self, m: usize, g: &ElementGeometry, pe: &[EulerPrim], ue: &[State], d: &[f64], r: &mut [State]) {
        for dir in 0..3 {
            let stride = [1, m, m * m][dir];
            for line in 0..m * m {
                let base = line_base(m, dir, line);
                for i in 0..m {
                    let a = base + i * stride;
                    let f = self.contravariant(&pe[a], &ue[a], &g.nu[a], &g.metric[a][dir]);
                    let c = 2.0 * d[i * m + i];
                    for k in 0..5 {
                        r[a][k] -= c * f[k];
                    }
                    for j in (i + 1)..m {
                        let b = base + j * stride;
                        let n = avg3(&g.metric[a][dir], &g.metric[b][dir]);
                        let f = self.flux.ec_normal_prim(&pe[a], &pe[b], &g.nu[a], &g.nu[b], &n);
                        let (ca, cb) = (2.0 * d[i * m + j], 2.0 * d[j * m + i]);
                        for k in 0..5 {
                            r[a][k] -= ca * f[k];
                            r[b][k] -= cb * f[k];
                        }
                    }
                }
            }
        }
    }

    /// Conservation-law right-hand side d(JU)/dt at every node. `jac` is the
    /// stage Jacobian, used only to scale the optional source.
    pub fn conservation_rhs(&self, geom: &StageGeometry, u: &[State], jac: &[f64], t: f64) -> Result<Vec<State>> {
        let ops = &self.mesh.ops;
        let m = ops.num_nodes();
        let mm = m * m;
        let np = mm * m;
        let ne = self.mesh.num_elements();
        if u.len() != ne * np || jac.len() != ne * np {
            return Err(Error::config("field size does not match the mesh"));
        }
        let prim = self.check_states(u, t)?;
        let d = ops.derivative_matrix();
        let w = ops.weights();
        let (w0, wn) = (w[0], w[m - 1]);

        // phase 1: one surface flux per face node
        let fstar: Vec<State> = (0..ne * 3)
            .into_par_iter()
            .flat_map_iter(|slot| {
                let (e, axis) = (slot / 3, slot % 3);
                let nb = self.mesh.neighbor(e, axis, true);
                let (gm, gp) = (&geom.elems[e], &geom.elems[nb]);
                (0..mm).map(move |q| {
                    let a = self.face_upper[axis][q];
                    let b = self.face_lower[axis][q];
                    self.surface_flux(&gm.metric[a][axis], &gm.nu[a], &gp.nu[b], &u[e * np + a], &u[nb * np + b])
                })
            })
            .collect();

        // phase 2: per-element volume and surface accumulation
        let mut out = vec![[0.0; 5]; ne * np];
        out.par_chunks_mut(np).enumerate().for_each(|(e, r)| {
            let g = &geom.elems[e];
            let ue = &u[e * np..(e + 1) * np];
            let pe = &prim[e * np..(e + 1) * np];
            self.volume_terms(g, pe, ue, d, r);
            for axis in 0..3 {
                let lower_nb = self.mesh.neighbor(e, axis, false);
                for q in 0..mm {
                    let a = self.face_upper[axis][q];
                    let own = self.contravariant(&pe[a], &ue[a], &g.nu[a], &g.metric[a][axis]);
                    let fs = &fstar[face_slot(e, axis) * mm + q];
                    for k in 0..5 {
                        r[a][k] -= (fs[k] - own[k]) / wn;
                    }
                    let b = self.face_lower[axis][q];
                    let own = self.contravariant(&pe[b], &ue[b], &g.nu[b], &g.metric[b][axis]);
                    let fs = &fstar[face_slot(lower_nb, axis) * mm + q];
                    for k in 0..5 {
                        r[b][k] += (fs[k] - own[k]) / w0;
                    }
                }
            }
            if let Some(src) = &self.source {
                for q in 0..np {
                    let s = src(&g.x[q], t);
                    let j = jac[e * np + q];
                    for k in 0..5 {
                        r[q][k] += j * s[k];
                    }
                }
            }
        });
        Ok(out)
    }

    /// One explicit RK step of the coupled D-GCL / conservation law system.
    pub fn rk_step(&self, state: &FieldState, scheme: &RkScheme, dt: f64) -> Result<FieldState> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::time_step(format!("time step must be positive, got {dt}")));
        }
        let t = state.t;
        let np = self.mesh.nodes_per_element();
        let s = scheme.stages();
        let mut vs: Vec<Vec<f64>> = Vec::with_capacity(s);
        let mut gs: Vec<Vec<State>> = Vec::with_capacity(s);
        let combine = |coef: &[f64], vs: &[Vec<f64>], gs: &[Vec<State>]| -> Result<(Vec<f64>, Vec<State>)> {
            let mut jac = state.jac.clone();
            let mut u = state.u.clone();
            let bad = u
                .par_iter_mut()
                .zip(jac.par_iter_mut())
                .enumerate()
                .map(|(q, (uq, jq))| {
                    let mut acc = [0.0; 5];
                    for (sg, &a) in coef.iter().enumerate() {
                        if a == 0.0 {
                            continue;
                        }
                        let v = vs[sg][q];
                        *jq += dt * a * v;
                        for k in 0..5 {
                            acc[k] += a * (gs[sg][q][k] - v * state.u[q][k]);
                        }
                    }
                    if !(*jq > 0.0) {
                        return Some(q);
                    }
                    for k in 0..5 {
                        uq[k] += dt / *jq * acc[k];
                    }
                    None
                })
                .min_by_key(|x| x.unwrap_or(usize::MAX))
                .flatten();
            if let Some(q) = bad {
                return Err(Error::time_step(format!(
                    "nonpositive stage Jacobian at element {}, node {}, t={t}; reduce the time step",
                    q / np,
                    q % np
                )));
            }
            Ok((jac, u))
        };
        for tau in 0..s {
            let ts = t + scheme.c[tau] * dt;
            let (jac, u) = combine(&scheme.a[tau], &vs, &gs)?;
            let geom = self.geometry(ts)?;
            vs.push(self.gcl_rhs(&geom));
            gs.push(self.conservation_rhs(&geom, &u, &jac, ts)?);
        }
        let (jac, u) = combine(&scheme.b, &vs, &gs)?;
        Ok(FieldState { n: state.n, u, jac, t: t + dt })
    }

    /// Largest |lambda - nu_l| over all nodes and directions.
    pub fn max_wave_speed(&self, geom: &StageGeometry, state: &FieldState) -> Result<f64> {
        let e = self.euler();
        let np = self.mesh.nodes_per_element();
        let mut lam: f64 = 0.0;
        for (q, u) in state.u.iter().enumerate() {
            e.check(u).map_err(|err| err.context(format!("element {}, node {}", q / np, q % np)))?;
            let nu = &geom.elems[q / np].nu[q % np];
            // max(|a - c|, |a|, |a + c|) = |a| + c with a = v_l - nu_l
            let c = (e.gamma * e.pressure(u) / u[0]).sqrt();
            for l in 0..3 {
                lam = lam.max((u[l + 1] / u[0] - nu[l]).abs() + c);
            }
        }
        Ok(lam)
    }

    /// dt = C min h / ((2N + 1) lambda_max); falls back to `dt_max` for a
    /// field at rest on a static mesh.
    pub fn compute_dt(&self, state: &FieldState, cfl: f64, dt_max: f64) -> Result<f64> {
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::config(format!("CFL number must lie in (0, 1], got {cfl}")));
        }
        let geom = self.geometry(state.t)?;
        let lam = self.max_wave_speed(&geom, state)?;
        if lam == 0.0 {
            return Ok(dt_max);
        }
        let h = geom.elems.iter().map(|g| self.mesh.element_size(g)).fold(f64::INFINITY, f64::min);
        let n = self.mesh.ops.degree() as f64;
        Ok(cfl * h / ((2.0 * n + 1.0) * lam))
    }

    /// Advance to `t_end` in `steps` equal steps; `observe` gets the step
    /// count and the new state after every step. The last step lands on
    /// `t_end` exactly.
    pub fn run_steps(
        &self,
        mut state: FieldState,
        scheme: &RkScheme,
        t_end: f64,
        steps: usize,
        mut observe: impl FnMut(usize, &FieldState) -> Result<()>,
    ) -> Result<FieldState> {
        let span = t_end - state.t;
        if steps == 0 || !(span > 0.0) {
            return Err(Error::time_step(format!("need a positive number of steps over a positive span, got {steps} over {span}")));
        }
        let h = span / steps as f64;
        let t0 = state.t;
        for n in 1..=steps {
            state = self.rk_step(&state, scheme, h)?;
            state.t = if n == steps { t_end } else { t0 + n as f64 * h };
            observe(n, &state)?;
        }
        Ok(state)
    }

    /// Advance to `t_end` with the CFL step recomputed at every time level.
    /// Steps are shortened so that each of the `outputs` equally spaced
    /// output times is hit exactly; `observe` gets the new state and whether
    /// it sits on an output time. Returns the final state and the step count.
    pub fn run_cfl(
        &self,
        mut state: FieldState,
        scheme: &RkScheme,
        cfl: f64,
        t_end: f64,
        outputs: usize,
        mut observe: impl FnMut(&FieldState, bool) -> Result<()>,
    ) -> Result<(FieldState, usize)> {
        let t0 = state.t;
        let span = t_end - t0;
        if outputs == 0 || !(span > 0.0) || !span.is_finite() {
            return Err(Error::time_step(format!("need a positive span and output count, got {span} and {outputs}")));
        }
        let mut steps = 0;
        for i in 1..=outputs {
            let target = if i == outputs { t_end } else { t0 + span * i as f64 / outputs as f64 };
            loop {
                let left = target - state.t;
                let dt = self.compute_dt(&state, cfl, span)?;
                if !(dt > 1e-12 * span) {
                    return Err(Error::time_step(format!("CFL step collapsed to {dt} at t={}", state.t)));
                }
                // split the remainder evenly instead of leaving a sliver
                let (h, lands) = if dt >= left { (left, true) } else if dt > 0.5 * left { (0.5 * left, false) } else { (dt, false) };
                state = self.rk_step(&state, scheme, h)?;
                steps += 1;
                if lands {
                    state.t = target;
                }
                observe(&state, lands)?;
                if lands {
                    break;
                }
            }
        }
        Ok((state, steps))
    }
}

#[inline]
fn line_base(m: usize, dir: usize, line: usize) -> usize {
    let (p, q) = (line % m, line / m);
    match dir {
        0 => node_index(m, 0, p, q),
        1 => node_index(m, p, 0, q),
        _ => node_index(m, p, q, 0),
    }
}

#[inline]
fn avg3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])]
}

#[inline]
fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluxes::{Dissipation, EcVariant};
    use crate::mesh::{MeshMotion, MotionKind};
    use crate::operators::OperatorSet;
    use crate::rk::SchemeKind;
    use std::f64::consts::PI;

    fn solver(k: usize, n: usize, amp: f64, diss: Dissipation) -> DgSolver {
        let kind = if amp == 0.0 { MotionKind::Static } else { MotionKind::Sinusoidal };
        let mesh = MovingMesh::new(
            [k; 3],
            MeshMotion::new(0.0, 2.0 * PI, amp, kind).unwrap(),
            OperatorSet::new(n).unwrap(),
        )
        .unwrap();
        DgSolver::new(mesh, EulerFlux::new(Euler::default(), EcVariant::Chandrashekar, diss).unwrap(), None).unwrap()
    }

    const FREE: State = [1.0, 0.3, 0.0, 0.0, 17.0];

    #[test]
    fn static_mesh_gcl_is_zero() {
        let s = solver(2, 3, 0.0, Dissipation::None);
        let g = s.geometry(0.3).unwrap();
        assert!(s.gcl_rhs(&g).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn static_constant_state_zero_rhs() {
        let s = solver(2, 3, 0.0, Dissipation::Roe);
        let f = s.init(0.0, |_| FREE).unwrap();
        let g = s.geometry(0.0).unwrap();
        let r = s.conservation_rhs(&g, &f.u, &f.jac, 0.0).unwrap();
        assert!(r.iter().all(|x| x.iter().all(|v| v.abs() < 1e-12)));
    }

    #[test]
    fn constant_state_rhs_equals_gcl_times_state() {
        let s = solver(2, 3, 0.05, Dissipation::None);
        let f = s.init(0.0, |_| FREE).unwrap();
        for &t in &[0.1, 0.37] {
            let g = s.geometry(t).unwrap();
            let v = s.gcl_rhs(&g);
            assert!(v.iter().any(|x| x.abs() > 1e-3));
            let r = s.conservation_rhs(&g, &f.u, &f.jac, t).unwrap();
            for q in 0..v.len() {
                for k in 0..5 {
                    assert!((r[q][k] - v[q] * FREE[k]).abs() < 1e-12, "{q} {k}");
                }
            }
        }
    }

    #[test]
    fn free_stream_steps_moving_mesh() {
        let s = solver(2, 3, 0.05, Dissipation::Roe);
        let mut f = s.init(0.0, |_| FREE).unwrap();
        let sch = RkScheme::new(SchemeKind::LowStorage54);
        let dt = s.compute_dt(&f, 0.9, 1.0).unwrap();
        for _ in 0..100 {
            let t = f.t;
            f = s.rk_step(&f, &sch, dt).unwrap();
            assert!((f.t - t - dt).abs() < 1e-15);
        }
        let dev = f.u.iter().flat_map(|u| (0..5).map(move |k| (u[k] - FREE[k]).abs())).fold(0.0, f64::max);
        assert!(dev <= 1e-11, "{dev}");
    }

    #[test]
    fn dt_formula() {
        let mesh = MovingMesh::new(
            [2; 3],
            MeshMotion::new(0.0, 2.0, 0.0, MotionKind::Static).unwrap(),
            OperatorSet::new(3).unwrap(),
        )
        .unwrap();
        let s = DgSolver::new(mesh, EulerFlux::new(Euler::default(), EcVariant::Ranocha, Dissipation::None).unwrap(), None).unwrap();
        let f = s.init(0.0, |_| s.euler().conserved(1.0, [0.0; 3], 1.0)).unwrap();
        let dt = s.compute_dt(&f, 0.5, 1.0).unwrap();
        assert!((dt - 0.5 / (7.0 * 1.4f64.sqrt())).abs() < 1e-15);
        assert!((s.compute_dt(&f, 1.0, 1.0).unwrap() - 2.0 * dt).abs() < 1e-15);
        assert!(s.compute_dt(&f, 1.5, 1.0).is_err());
        assert!(matches!(s.rk_step(&f, &RkScheme::new(SchemeKind::Classical4), -1.0), Err(Error::TimeStep(_))));
    }

    #[test]
    fn inadmissible_state_reports_location() {
        let s = solver(2, 2, 0.0, Dissipation::None);
        let mut f = s.init(0.0, |_| FREE).unwrap();
        f.u[27 * 3 + 5][0] = -1.0;
        let g = s.geometry(0.0).unwrap();
        match s.conservation_rhs(&g, &f.u, &f.jac, 0.0) {
            Err(Error::State(msg)) => assert!(msg.contains("element 3"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn affine_translation_has_zero_gcl() {
        // uniform translation: constant velocity and constant metrics
        let s = solver(2, 3, 0.0, Dissipation::None);
        let mut g = (*s.geometry(0.0).unwrap()).clone();
        for e in g.elems.iter_mut() {
            e.nu.iter_mut().for_each(|v| *v = [0.3, -0.2, 0.7]);
        }
        assert!(s.gcl_rhs(&g).iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn run_steps_lands_on_end_time() {
        let s = solver(2, 2, 0.05, Dissipation::Roe);
        let f = s.init(0.0, |_| FREE).unwrap();
        let mut seen = vec![];
        let f = s
            .run_steps(f, &RkScheme::new(SchemeKind::LowStorage54), 0.3, 3, |n, st| {
                seen.push((n, st.t));
                Ok(())
            })
            .unwrap();
        assert_eq!(f.t, 0.3);
        assert_eq!(seen.len(), 3);
        assert!((seen[0].1 - 0.1).abs() < 1e-15);
        assert!(s.run_steps(f, &RkScheme::new(SchemeKind::Classical4), 0.3, 1, |_, _| Ok(())).is_err());
    }

    #[test]
    fn run_cfl_hits_output_times() {
        let s = solver(2, 2, 0.05, Dissipation::Roe);
        let f = s.init(0.0, |_| FREE).unwrap();
        let dt = s.compute_dt(&f, 0.5, 1.0).unwrap();
        let mut outs = vec![];
        let mut count = 0;
        let (f, steps) = s
            .run_cfl(f, &RkScheme::new(SchemeKind::LowStorage54), 0.5, 0.3, 3, |st, out| {
                count += 1;
                if out {
                    outs.push(st.t);
                }
                Ok(())
            })
            .unwrap();
        assert_eq!(f.t, 0.3);
        assert_eq!(steps, count);
        assert_eq!(outs.len(), 3);
        assert!((outs[0] - 0.1).abs() < 1e-15 && (outs[1] - 0.2).abs() < 1e-15);
        assert!(steps as f64 >= 0.3 / dt);
        assert!(s.run_cfl(f, &RkScheme::new(SchemeKind::Classical4), 0.5, 0.3, 1, |_, _| Ok(())).is_err());
    }
}
