//! Compressible Euler (3D) and shallow water (2D) systems with entropy
//! machinery, wave speeds and the logarithmic mean.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_GAMMA: f64 = 1.4;
pub const DEFAULT_GRAVITY: f64 = 1.0;

/// Entropy, entropy variables, potentials and entropy fluxes of one state.
/// Direction-indexed fields have unused trailing entries for 2D systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyBundle<const P: usize> {
    pub s: f64,
    pub w: [f64; P],
    pub phi: f64,
    pub psi: [f64; 3],
    pub entropy_flux: [f64; 3],
}

/// A hyperbolic system with a convex entropy. All methods except `check`
/// assume an admissible state.
pub trait EntropySystem<const P: usize>: Copy + Send + Sync {
    /// Number of space directions the flux is defined for.
    const DIM: usize;

    fn check(&self, u: &[f64; P]) -> Result<()>;
    fn flux(&self, u: &[f64; P], l: usize) -> [f64; P];
    fn entropy(&self, u: &[f64; P]) -> EntropyBundle<P>;
    /// Advective velocity u_l and sound (or gravity wave) speed.
    fn speeds(&self, u: &[f64; P], l: usize) -> (f64, f64);

    fn max_wave_speed(&self, u: &[f64; P], nu: &[f64; 3], l: usize) -> f64 {
        let (v, c) = self.speeds(u, l);
        let a = v - nu[l];
        (a - c).abs().max(a.abs()).max((a + c).abs())
    }

    fn checked_flux(&self, u: &[f64; P], l: usize) -> Result<[f64; P]> {
        self.check(u)?;
        check_direction(l, Self::DIM)?;
        Ok(self.flux(u, l))
    }

    fn checked_entropy(&self, u: &[f64; P]) -> Result<EntropyBundle<P>> {
        self.check(u)?;
        Ok(self.entropy(u))
    }

    fn checked_max_wave_speed(&self, u: &[f64; P], nu: &[f64; 3], l: usize) -> Result<f64> {
        self.check(u)?;
        check_direction(l, Self::DIM)?;
        Ok(self.max_wave_speed(u, nu, l))
    }
}

fn check_direction(l: usize, dim: usize) -> Result<()> {
    if l >= dim {
        return Err(Error::config(format!("direction {l} out of range for a {dim}D system")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Euler {
    pub gamma: f64,
}

impl Default for Euler {
    fn default() -> Self {
        Euler { gamma: DEFAULT_GAMMA }
    }
}

/// Primitive view of an Euler state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerPrim {
    pub rho: f64,
    pub v: [f64; 3],
    pub p: f64,
    pub beta: f64,
}

impl Euler {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::config(format!("gamma must exceed 1, got {gamma}")));
        }
        Ok(Euler { gamma })
    }

    #[inline]
    pub fn pressure(&self, u: &[f64; 5]) -> f64 {
        let ke = 0.5 * (u[1] * u[1] + u[2] * u[2] + u[3] * u[3]) / u[0];
        (self.gamma - 1.0) * (u[4] - ke)
    }

    #[inline]
    pub fn primitive(&self, u: &[f64; 5]) -> EulerPrim {
        let rho = u[0];
        let v = [u[1] / rho, u[2] / rho, u[3] / rho];
        let p = self.pressure(u);
        EulerPrim { rho, v, p, beta: 0.5 * rho / p }
    }

    pub fn conserved(&self, rho: f64, v: [f64; 3], p: f64) -> [f64; 5] {
        let e = p / (self.gamma - 1.0) + 0.5 * rho * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        [rho, rho * v[0], rho * v[1], rho * v[2], e]
    }
}

impl EntropySystem<5> for Euler {
    const DIM: usize = 3;

    fn check(&self, u: &[f64; 5]) -> Result<()> {
        if !u.iter().all(|x| x.is_finite()) {
            return Err(Error::state(format!("non-finite Euler state {u:?}")));
        }
        if u[0] <= 0.0 {
            return Err(Error::state(format!("nonpositive density {}", u[0])));
        }
        let p = self.pressure(u);
        if p <= 0.0 {
            return Err(Error::state(format!("nonpositive pressure {p}")));
        }
        Ok(())
    }

    #[inline]
    fn flux(&self, u: &[f64; 5], l: usize) -> [f64; 5] {
        let p = self.pressure(u);
        let vl = u[l + 1] / u[0];
        let mut f = [u[0] * vl, u[1] * vl, u[2] * vl, u[3] * vl, (u[4] + p) * vl];
        f[l + 1] += p;
        f
    }

    fn entropy(&self, u: &[f64; 5]) -> EntropyBundle<5> {
        let g = self.gamma;
        let q = self.primitive(u);
        let vsq = q.v[0] * q.v[0] + q.v[1] * q.v[1] + q.v[2] * q.v[2];
        let sigma = q.p.ln() - g * q.rho.ln();
        let s = -q.rho * sigma / (g - 1.0);
        let w = [
            (g - sigma) / (g - 1.0) - q.beta * vsq,
            2.0 * q.beta * q.v[0],
            2.0 * q.beta * q.v[1],
            2.0 * q.beta * q.v[2],
            -2.0 * q.beta,
        ];
        EntropyBundle {
            s,
            w,
            phi: q.rho,
            psi: [u[1], u[2], u[3]],
            entropy_flux: [s * q.v[0], s * q.v[1], s * q.v[2]],
        }
    }

    #[inline]
    fn speeds(&self, u: &[f64; 5], l: usize) -> (f64, f64) {
        let p = self.pressure(u);
        (u[l + 1] / u[0], (self.gamma * p / u[0]).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShallowWater {
    pub g: f64,
}

impl Default for ShallowWater {
    fn default() -> Self {
        ShallowWater { g: DEFAULT_GRAVITY }
    }
}

impl ShallowWater {
    pub fn new(g: f64) -> Result<Self> {
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::config(format!("gravity must be positive, got {g}")));
        }
        Ok(ShallowWater { g })
    }
}

impl EntropySystem<3> for ShallowWater {
    const DIM: usize = 2;

    fn check(&self, u: &[f64; 3]) -> Result<()> {
        if !u.iter().all(|x| x.is_finite()) {
            return Err(Error::state(format!("non-finite shallow-water state {u:?}")));
        }
        if u[0] <= 0.0 {
            return Err(Error::state(format!("nonpositive water height {}", u[0])));
        }
        Ok(())
    }

    #[inline]
    fn flux(&self, u: &[f64; 3], l: usize) -> [f64; 3] {
        let vl = u[l + 1] / u[0];
        let mut f = [u[0] * vl, u[1] * vl, u[2] * vl];
        f[l + 1] += 0.5 * self.g * u[0] * u[0];
        f
    }

    fn entropy(&self, u: &[f64; 3]) -> EntropyBundle<3> {
        let h = u[0];
        let v = [u[1] / h, u[2] / h];
        let vsq = v[0] * v[0] + v[1] * v[1];
        let phi = 0.5 * self.g * h * h;
        let s = 0.5 * h * vsq + phi;
        let fs = 0.5 * h * vsq + self.g * h * h;
        EntropyBundle {
            s,
            w: [self.g * h - 0.5 * vsq, v[0], v[1]],
            phi,
            psi: [phi * v[0], phi * v[1], 0.0],
            entropy_flux: [fs * v[0], fs * v[1], 0.0],
        }
    }

    #[inline]
    fn speeds(&self, u: &[f64; 3], l: usize) -> (f64, f64) {
        (u[l + 1] / u[0], (self.g * u[0]).sqrt())
    }
}

/// Logarithmic mean (b - a)/(ln b - ln a), bitwise symmetric in its arguments.
#[inline]
pub fn log_mean_unchecked(a: f64, b: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let zeta = lo / hi;
    let f = (zeta - 1.0) / (zeta + 1.0);
    let u = f * f;
    if (zeta - 1.0) * (zeta - 1.0) < 1e-4 {
        let series = 1.0 + u / 3.0 + u * u / 5.0 + u * u * u / 7.0;
        (lo + hi) / (2.0 * series)
    } else {
        (hi - lo) / (hi / lo).ln()
    }
}

pub fn log_mean(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::state(format!("logarithmic mean needs positive finite arguments, got ({a}, {b})")));
    }
    Ok(log_mean_unchecked(a, b))
}
