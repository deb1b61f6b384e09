//! Legendre-Gauss-Lobatto nodes, quadrature weights and the collocation
//! derivative matrix with its summation-by-parts structure.

use crate::error::{Error, Result};

pub const MIN_DEGREE: usize = 1;
pub const MAX_DEGREE: usize = 15;

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Immutable one-dimensional operator set for polynomial degree `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet {
    n: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    bary: Vec<f64>,
    // row-major (n+1)x(n+1)
    d: Vec<f64>,
}

/// Legendre polynomial P_n and its derivative at x.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    let (mut d0, mut d1) = (0.0, 1.0);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        let d2 = d0 + (2.0 * kf - 1.0) * p1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
    (p1, d1)
}

fn lgl_nodes(n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n + 1];
    x[0] = -1.0;
    x[n] = 1.0;
    let nf = n as f64;
    // interior roots of (1-x^2) P_n'(x); its derivative is -n(n+1) P_n(x)
    for j in 1..(n + 1) / 2 {
        let mut xi = -(std::f64::consts::PI * j as f64 / nf).cos();
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = legendre(n, xi);
            let q = (1.0 - xi * xi) * dp;
            let dq = -nf * (nf + 1.0) * p;
            let delta = q / dq;
            xi -= delta;
            if delta.abs() <= NEWTON_TOL * xi.abs().max(1.0) {
                break;
            }
        }
        x[j] = xi;
        x[n - j] = -xi;
    }
    if n % 2 == 0 {
        x[n / 2] = 0.0;
    }
    x
}

impl OperatorSet {
    pub fn new(n: usize) -> Result<Self> {
        if !(MIN_DEGREE..=MAX_DEGREE).contains(&n) {
            return Err(Error::config(format!(
                "polynomial degree N={n} outside supported range {MIN_DEGREE}..={MAX_DEGREE}"
            )));
        }
        let nodes = lgl_nodes(n);
        let nf = n as f64;
        let weights: Vec<f64> = nodes
            .iter()
            .map(|&x| {
                let (p, _) = legendre(n, x);
                2.0 / (nf * (nf + 1.0) * p * p)
            })
            .collect();
        let m = n + 1;
        let mut bary = vec![1.0; m];
        for j in 0..m {
            for k in 0..m {
                if k != j {
                    bary[j] *= nodes[j] - nodes[k];
                }
            }
            bary[j] = 1.0 / bary[j];
        }
        let mut d = vec![0.0; m * m];
        for i in 0..m {
            let mut diag = 0.0;
            for j in 0..m {
                if i != j {
                    let v = bary[j] / bary[i] / (nodes[i] - nodes[j]);
                    d[i * m + j] = v;
                    diag -= v;
                }
            }
            d[i * m + i] = diag;
        }
        Ok(Self { n, nodes, weights, bary, d })
    }

    pub fn degree(&self) -> usize {
        self.n
    }
    pub fn num_nodes(&self) -> usize {
        self.n + 1
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    /// Row-major derivative matrix, D_ij = l_j'(x_i).
    pub fn derivative_matrix(&self) -> &[f64] {
        &self.d
    }
    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.d[i * (self.n + 1) + j]
    }

    /// Q = M D, row-major.
    pub fn q_matrix(&self) -> Vec<f64> {
        let m = self.n + 1;
        let mut q = self.d.clone();
        for i in 0..m {
            for j in 0..m {
                q[i * m + j] *= self.weights[i];
            }
        }
        q
    }

    /// B = diag(-1, 0, ..., 0, 1), row-major.
    pub fn boundary_matrix(&self) -> Vec<f64> {
        let m = self.n + 1;
        let mut b = vec![0.0; m * m];
        b[0] = -1.0;
        b[m * m - 1] = 1.0;
        b
    }

    pub fn differentiate(&self, values: &[f64]) -> Result<Vec<f64>> {
        let m = self.n + 1;
        if values.len() != m {
            return Err(Error::config(format!(
                "expected {m} nodal values, got {}",
                values.len()
            )));
        }
        Ok((0..m)
            .map(|i| (0..m).map(|j| self.d[i * m + j] * values[j]).sum())
            .collect())
    }

    /// Lagrange basis values at xi (exact Kronecker delta at the nodes).
    pub fn lagrange_basis(&self, xi: f64) -> Vec<f64> {
        let m = self.n + 1;
        if let Some(k) = self.nodes.iter().position(|&x| x == xi) {
            let mut l = vec![0.0; m];
            l[k] = 1.0;
            return l;
        }
        let terms: Vec<f64> = (0..m).map(|j| self.bary[j] / (xi - self.nodes[j])).collect();
        let denom: f64 = terms.iter().sum();
        terms.into_iter().map(|t| t / denom).collect()
    }

    /// Barycentric evaluation of the nodal interpolant.
    pub fn interpolate(&self, values: &[f64], xi: f64) -> Result<f64> {
        if values.len() != self.n + 1 {
            return Err(Error::config(format!(
                "expected {} nodal values, got {}",
                self.n + 1,
                values.len()
            )));
        }
        if !(-1.0..=1.0).contains(&xi) {
            return Err(Error::config(format!("interpolation point {xi} outside [-1,1]")));
        }
        Ok(self
            .lagrange_basis(xi)
            .iter()
            .zip(values)
            .map(|(l, v)| l * v)
            .sum())
    }

    /// max |Q + Q^T - B|
    pub fn sbp_residual(&self) -> f64 {
        let m = self.n + 1;
        let q = self.q_matrix();
        let b = self.boundary_matrix();
        let mut r: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                r = r.max((q[i * m + j] + q[j * m + i] - b[i * m + j]).abs());
            }
        }
        r
    }

    /// Max quadrature error over monomials of degree 0..=2N-1.
    pub fn quadrature_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for k in 0..2 * self.n {
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            let approx: f64 = self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| w * x.powi(k as i32))
                .sum();
            r = r.max((approx - exact).abs());
        }
        r
    }

    /// max_i |sum_j D_ij|
    pub fn row_sum_residual(&self) -> f64 {
        let m = self.n + 1;
        (0..m)
            .map(|i| self.d[i * m..(i + 1) * m].iter().sum::<f64>().abs())
            .fold(0.0, f64::max)
    }
}
