//! Initial data and solver setups for the standard test problems.

use crate::dgsem::{DgSolver, FieldState, SourceFn, State};
use crate::diagnostics::mms_source;
use crate::error::Result;
use crate::fluxes::{Dissipation, EcVariant, EulerFlux};
use crate::mesh::{MeshMotion, MotionKind, MovingMesh};
use crate::operators::OperatorSet;
use crate::physics::Euler;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;
use std::sync::Arc;

/// Reference Mach number of the vortex problem.
pub const TGV_MACH: f64 = 0.1;
/// Mesh displacement amplitude used for moving-mesh runs.
pub const MOVING_AMPLITUDE: f64 = 0.05;

/// Taylor-Green vortex on [0, 2 pi]^3.
pub fn tgv_initial(euler: &Euler, x: &[f64; 3]) -> State {
    let (s, c) = (|v: f64| v.sin(), |v: f64| v.cos());
    let v = [s(x[0]) * c(x[1]) * c(x[2]), -c(x[0]) * s(x[1]) * c(x[2]), 0.0];
    let p0 = 1.0 / (euler.gamma * TGV_MACH * TGV_MACH);
    let p = p0 + (c(2.0 * x[0]) + c(2.0 * x[1])) * (c(2.0 * x[2]) + 2.0) / 16.0;
    euler.conserved(1.0, v, p)
}

/// Uniform state (rho, rho u, 0, 0, E) used for free-stream preservation.
pub const FREESTREAM: State = [1.0, 0.3, 0.0, 0.0, 17.0];

fn motion(lo: f64, hi: f64, amplitude: f64) -> Result<MeshMotion> {
    let kind = if amplitude == 0.0 { MotionKind::Static } else { MotionKind::Sinusoidal };
    MeshMotion::new(lo, hi, amplitude, kind)
}

/// Solver on the periodic box [lo, hi]^3 with `k` elements per direction.
pub fn box_solver(
    k: usize,
    n: usize,
    bounds: (f64, f64),
    amplitude: f64,
    variant: EcVariant,
    dissipation: Dissipation,
    source: Option<SourceFn>,
) -> Result<DgSolver> {
    let mesh = MovingMesh::new([k; 3], motion(bounds.0, bounds.1, amplitude)?, OperatorSet::new(n)?)?;
    let flux = EulerFlux::new(Euler::default(), variant, dissipation)?;
    DgSolver::new(mesh, flux, source)
}

/// Vortex setup on [0, 2 pi]^3.
pub fn tgv_solver(k: usize, n: usize, amplitude: f64, variant: EcVariant, dissipation: Dissipation) -> Result<DgSolver> {
    box_solver(k, n, (0.0, 2.0 * PI), amplitude, variant, dissipation, None)
}

/// Manufactured-solution setup on [-1, 1]^3 with matrix dissipation.
pub fn mms_solver(k: usize, n: usize, amplitude: f64) -> Result<DgSolver> {
    let euler = Euler::default();
    let src: SourceFn = Arc::new(move |x: &[f64; 3], t: f64| mms_source(&euler, x, t));
    box_solver(k, n, (-1.0, 1.0), amplitude, EcVariant::Chandrashekar, Dissipation::Roe, Some(src))
}

/// Independent random admissible states at every node: density and
/// pressure in [0.5, 2], velocity components in [-1, 1].
pub fn random_field(solver: &DgSolver, t: f64, seed: u64) -> Result<FieldState> {
    let mut f = solver.init(t, |_| FREESTREAM)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let e = *solver.euler();
    for u in f.u.iter_mut() {
        let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        *u = e.conserved(rng.gen_range(0.5..2.0), v, rng.gen_range(0.5..2.0));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::EntropySystem;

    #[test]
    fn tgv_initial_values() {
        let e = Euler::default();
        let u = tgv_initial(&e, &[0.0, 0.0, 0.0]);
        assert_eq!(u[0], 1.0);
        assert_eq!(&u[1..4], &[0.0, 0.0, 0.0]);
        let p = e.pressure(&u);
        assert!((p - (100.0 / 1.4 + 3.0 / 8.0)).abs() < 1e-12);
        let u = tgv_initial(&e, &[PI / 2.0, 0.0, 0.0]);
        assert!((u[1] - 1.0).abs() < 1e-15);
        e.check(&FREESTREAM).unwrap();
    }

    #[test]
    fn setups_build() {
        let s = tgv_solver(2, 3, MOVING_AMPLITUDE, EcVariant::Ranocha, Dissipation::Roe).unwrap();
        assert_eq!(s.mesh.num_elements(), 8);
        let s = mms_solver(2, 3, 0.0).unwrap();
        assert!(s.mesh.is_static() && s.source.is_some());
    }
}
