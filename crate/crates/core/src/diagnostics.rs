//! Entropy accounting, error norms, convergence rates, the manufactured
//! solution and the interior-face entropy residual probe.

use crate::dgsem::{DgSolver, FieldState, State};
use crate::error::Result;
use crate::fluxes::entropy_jump;
use crate::physics::{EntropySystem, Euler};
use serde::Serialize;
use std::f64::consts::PI;

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }
    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// sum over elements and nodes of w_i w_j w_k f(U) J, in fixed order.
pub fn quadrature(solver: &DgSolver, state: &FieldState, f: impl Fn(&State) -> f64) -> f64 {
    let w = solver.mesh.ops.weights();
    let m = w.len();
    let np = m * m * m;
    let mut acc = CompensatedSum::default();
    for (q, (u, j)) in state.u.iter().zip(&state.jac).enumerate() {
        let l = q % np;
        let (i, jj, k) = (l % m, (l / m) % m, l / (m * m));
        acc.add(w[i] * w[jj] * w[k] * f(u) * j);
    }
    acc.value()
}

/// Total discrete entropy.
pub fn discrete_entropy(solver: &DgSolver, state: &FieldState) -> f64 {
    let e = *solver.euler();
    quadrature(solver, state, |u| e.entropy(u).s)
}

/// Integrals of mass, momentum and energy.
pub fn conserved_totals(solver: &DgSolver, state: &FieldState) -> [f64; 5] {
    let mut out = [0.0; 5];
    for (k, o) in out.iter_mut().enumerate() {
        *o = quadrature(solver, state, |u| u[k]);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecordSample {
    pub t: f64,
    pub entropy: f64,
    pub totals: [f64; 5],
}

/// Time series of entropy and conserved totals.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunRecord {
    pub samples: Vec<RecordSample>,
}

impl RunRecord {
    pub fn push(&mut self, solver: &DgSolver, state: &FieldState) {
        if let Some(last) = self.samples.last() {
            if state.t <= last.t {
                return;
            }
        }
        self.samples.push(RecordSample {
            t: state.t,
            entropy: discrete_entropy(solver, state),
            totals: conserved_totals(solver, state),
        });
    }

    /// S(T) - S(0), taking the last sample with t <= T.
    pub fn entropy_error(&self, t_end: f64) -> f64 {
        match (self.samples.first(), self.samples.iter().rev().find(|s| s.t <= t_end)) {
            (Some(a), Some(b)) => b.entropy - a.entropy,
            _ => 0.0,
        }
    }
}

/// Per-variable (L2, Linf) errors against an exact solution. The L2 norm is
/// the root mean square over the domain, (int e^2 / int 1)^(1/2), with
/// quadrature weighted by the evolved Jacobian.
pub fn error_norms(solver: &DgSolver, state: &FieldState, exact: impl Fn(&[f64; 3]) -> State) -> Result<[(f64, f64); 5]> {
    let geom = solver.geometry(state.t)?;
    let w = solver.mesh.ops.weights();
    let m = w.len();
    let np = m * m * m;
    let mut l2 = [CompensatedSum::default(); 5];
    let mut volume = CompensatedSum::default();
    let mut linf = [0.0f64; 5];
    for (q, (u, j)) in state.u.iter().zip(&state.jac).enumerate() {
        let l = q % np;
        let x = &geom.elems[q / np].x[l];
        let ex = exact(x);
        let wt = w[l % m] * w[(l / m) % m] * w[l / (m * m)] * j;
        volume.add(wt);
        for k in 0..5 {
            let d = u[k] - ex[k];
            l2[k].add(wt * d * d);
            linf[k] = linf[k].max(d.abs());
        }
    }
    let mut out = [(0.0, 0.0); 5];
    for k in 0..5 {
        out[k] = ((l2[k].value() / volume.value()).sqrt(), linf[k]);
    }
    Ok(out)
}

/// Rates between consecutive (elements per direction, error) rows; `None`
/// where an error is zero.
pub fn eoc(rows: &[(usize, f64)]) -> Vec<Option<f64>> {
    rows.windows(2)
        .map(|p| {
            let ((kc, ec), (kf, ef)) = (p[0], p[1]);
            if ec > 0.0 && ef > 0.0 && kf != kc {
                Some((ec / ef).ln() / (kf as f64 / kc as f64).ln())
            } else {
                None
            }
        })
        .collect()
}

/// Least-squares slope of log(y) against log(x).
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

const MMS_SPEED: f64 = 0.6;

/// Manufactured solution: rho = rho u_i = 2 + 0.1 sin(pi (x1 + x2 + x3 - 0.6 t)), E = rho^2.
pub fn mms_exact(x: &[f64; 3], t: f64) -> State {
    let q = 2.0 + 0.1 * (PI * (x[0] + x[1] + x[2] - MMS_SPEED * t)).sin();
    [q, q, q, q, q * q]
}

/// Residual d u/dt + div f of the manufactured solution.
pub fn mms_source(euler: &Euler, x: &[f64; 3], t: f64) -> State {
    let phase = PI * (x[0] + x[1] + x[2] - MMS_SPEED * t);
    let (sn, cs) = phase.sin_cos();
    let q = 2.0 + 0.1 * sn;
    // d q / d x_l for every l
    let c = 0.1 * PI * cs;
    let gm1 = euler.gamma - 1.0;
    // p = (gamma - 1)(q^2 - 3q/2)
    let px = gm1 * (2.0 * q - 1.5) * c;
    let mass = (3.0 - MMS_SPEED) * c;
    let mom = mass + px;
    let energy = (6.0 - 2.0 * MMS_SPEED) * q * c + 3.0 * px;
    [mass, mom, mom, mom, energy]
}

/// max over interior face nodes of
/// |jump(Psi_n) - {nu_n} jump(Phi) - jump(W)^T G*_n - D|, where D is the
/// quadratic dissipation of the surface flux (omitted when
/// `subtract_dissipation` is false).
pub fn interior_face_entropy_residual(solver: &DgSolver, state: &FieldState, subtract_dissipation: bool) -> Result<f64> {
    let geom = solver.geometry(state.t)?;
    let mesh = &solver.mesh;
    let euler = *solver.euler();
    let m = mesh.ops.num_nodes();
    let np = m * m * m;
    let mut worst: f64 = 0.0;
    for e in 0..mesh.num_elements() {
        for axis in 0..3 {
            let nb = mesh.neighbor(e, axis, true);
            let (gm, gp) = (&geom.elems[e], &geom.elems[nb]);
            let up = gm.face_nodes(axis, true);
            let lo = gp.face_nodes(axis, false);
            for (&a, &b) in up.iter().zip(&lo) {
                let sn = gm.metric[a][axis];
                let (ul, ur) = (&state.u[e * np + a], &state.u[nb * np + b]);
                let (nul, nur) = (&gm.nu[a], &gp.nu[b]);
                euler.check(ul)?;
                euler.check(ur)?;
                let (bl, br) = (euler.entropy(ul), euler.entropy(ur));
                let dot = |v: &[f64; 3]| sn[0] * v[0] + sn[1] * v[1] + sn[2] * v[2];
                let jpsi = dot(&br.psi) - dot(&bl.psi);
                let nun = 0.5 * (dot(nul) + dot(nur));
                let jphi = br.phi - bl.phi;
                let g = solver.surface_flux(&sn, nul, nur, ul, ur);
                let jw = entropy_jump(&euler, ul, ur);
                let wg: f64 = (0..5).map(|k| jw[k] * g[k]).sum();
                let d = if subtract_dissipation { solver.surface_dissipation(&sn, nul, nur, ul, ur) } else { 0.0 };
                worst = worst.max((jpsi - nun * jphi - wg - d).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluxes::{Dissipation, EcVariant, EulerFlux};
    use crate::mesh::{MeshMotion, MotionKind, MovingMesh};
    use crate::operators::OperatorSet;
    use rand::{Rng, SeedableRng};

    fn solver(k: usize, n: usize, lo: f64, hi: f64, amp: f64, d: Dissipation) -> DgSolver {
        let kind = if amp == 0.0 { MotionKind::Static } else { MotionKind::Sinusoidal };
        let mesh = MovingMesh::new([k; 3], MeshMotion::new(lo, hi, amp, kind).unwrap(), OperatorSet::new(n).unwrap()).unwrap();
        DgSolver::new(mesh, EulerFlux::new(Euler::default(), EcVariant::Chandrashekar, d).unwrap(), None).unwrap()
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1.0);
        for _ in 0..10 {
            s.add(1e-16);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-15).abs() < 1e-30);
    }

    #[test]
    fn entropy_of_reference_state_and_unit_cube() {
        let s = solver(2, 3, 0.0, 1.0, 0.05, Dissipation::None);
        let f = s.init(0.0, |_| s.euler().conserved(1.0, [0.0; 3], 1.0)).unwrap();
        assert_eq!(discrete_entropy(&s, &f), 0.0);
        let one = solver(1, 3, 0.0, 1.0, 0.0, Dissipation::None);
        let u = one.euler().conserved(2.0, [0.5, 0.0, 0.0], 3.0);
        let sigma = one.euler().entropy(&u).s;
        let f = one.init(0.0, |_| u).unwrap();
        assert!((discrete_entropy(&one, &f) - sigma).abs() < 1e-14 * sigma.abs());
    }

    #[test]
    fn entropy_independent_of_loop_order() {
        let s = solver(4, 3, 0.0, 2.0 * PI, 0.05, Dissipation::None);
        let e = *s.euler();
        let f = s
            .init(0.0, |x| {
                let v = [x[0].sin() * x[1].cos() * x[2].cos(), -x[0].cos() * x[1].sin() * x[2].cos(), 0.0];
                let p = 100.0 / 1.4 + ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) * ((2.0 * x[2]).cos() + 2.0) / 16.0;
                e.conserved(1.0, v, p)
            })
            .unwrap();
        let a = discrete_entropy(&s, &f);
        // reversed traversal, plain summation per element then across
        let w = s.mesh.ops.weights();
        let m = w.len();
        let np = m * m * m;
        let mut total = 0.0;
        for el in (0..s.mesh.num_elements()).rev() {
            let mut part = 0.0;
            for k in (0..m).rev() {
                for j in (0..m).rev() {
                    for i in (0..m).rev() {
                        let q = el * np + i + m * (j + m * k);
                        part += w[i] * w[j] * w[k] * e.entropy(&f.u[q]).s * f.jac[q];
                    }
                }
            }
            total += part;
        }
        assert!((a - total).abs() <= 1e-13 * a.abs(), "{a} {total}");
    }

    #[test]
    fn error_norms_examples() {
        let s = solver(2, 3, 0.0, 1.0, 0.0, Dissipation::None);
        let f = s.init(0.0, |x| mms_exact(x, 0.0)).unwrap();
        let n = error_norms(&s, &f, |x| mms_exact(x, 0.0)).unwrap();
        assert!(n.iter().all(|&(a, b)| a == 0.0 && b == 0.0));
        let n = error_norms(&s, &f, |x| {
            let mut v = mms_exact(x, 0.0);
            v[2] -= 0.01;
            v
        })
        .unwrap();
        assert!((n[2].0 - 0.01).abs() < 1e-14 && (n[2].1 - 0.01).abs() < 1e-14);
    }

    #[test]
    fn eoc_examples() {
        let r = eoc(&[(2, 1e-2), (4, 1e-3)]);
        assert!((r[0].unwrap() - 10f64.log2()).abs() < 1e-12);
        assert_eq!(eoc(&[(2, 1e-3), (4, 1e-3)])[0], Some(0.0));
        let r = eoc(&[(32, 1.26e-7), (64, 7.82e-9)]);
        assert!((r[0].unwrap() - 4.01).abs() < 0.01);
        assert_eq!(eoc(&[(2, 0.0), (4, 1.0)])[0], None);
        assert!((loglog_slope(&[1.0, 2.0, 4.0], &[3.0, 48.0, 768.0]) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn mms_source_matches_finite_differences() {
        let e = Euler::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for _ in 0..100 {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let t = rng.gen_range(0.0..5.0);
            let mut fd = [0.0; 5];
            let (a, b) = (mms_exact(&x, t + h), mms_exact(&x, t - h));
            for k in 0..5 {
                fd[k] = (a[k] - b[k]) / (2.0 * h);
            }
            for l in 0..3 {
                let (mut xp, mut xm) = (x, x);
                xp[l] += h;
                xm[l] -= h;
                let (fp, fm) = (e.flux(&mms_exact(&xp, t), l), e.flux(&mms_exact(&xm, t), l));
                for k in 0..5 {
                    fd[k] += (fp[k] - fm[k]) / (2.0 * h);
                }
            }
            let src = mms_source(&e, &x, t);
            let scale = src.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-3);
            for k in 0..5 {
                assert!((src[k] - fd[k]).abs() <= 1e-6 * scale.max(1.0), "{k}: {} vs {}", src[k], fd[k]);
            }
            assert_eq!(src[1], src[2]);
            assert_eq!(src[2], src[3]);
            let shifted = mms_source(&e, &[x[0] + 2.0, x[1], x[2]], t);
            for k in 0..5 {
                assert!((shifted[k] - src[k]).abs() < 1e-13);
            }
        }
    }

    fn random_field(s: &DgSolver, seed: u64) -> FieldState {
        crate::cases::random_field(s, 0.3, seed).unwrap()
    }

    #[test]
    fn face_entropy_residual_ec_and_es() {
        let ec = solver(2, 3, 0.0, 2.0 * PI, 0.05, Dissipation::None);
        let f = random_field(&ec, 3);
        assert!(interior_face_entropy_residual(&ec, &f, true).unwrap() <= 1e-11);
        let es = solver(2, 3, 0.0, 2.0 * PI, 0.05, Dissipation::Roe);
        let f = random_field(&es, 4);
        assert!(interior_face_entropy_residual(&es, &f, true).unwrap() <= 1e-11);
        // without accounting for the dissipation the identity is violated
        assert!(interior_face_entropy_residual(&es, &f, false).unwrap() > 1e-6);
        let uni = es.init(0.3, |_| [1.0, 0.2, 0.1, 0.0, 3.0]).unwrap();
        assert_eq!(interior_face_entropy_residual(&es, &uni, true).unwrap(), 0.0);
    }

    #[test]
    fn record_entropy_error() {
        let mut r = RunRecord::default();
        assert_eq!(r.entropy_error(1.0), 0.0);
        r.samples.push(RecordSample { t: 0.0, entropy: 2.0, totals: [0.0; 5] });
        assert_eq!(r.entropy_error(0.0), 0.0);
        r.samples.push(RecordSample { t: 1.0, entropy: 1.5, totals: [0.0; 5] });
        assert_eq!(r.entropy_error(1.0), -0.5);
    }
}
