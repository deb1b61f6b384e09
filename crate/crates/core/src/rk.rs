//! Explicit Runge-Kutta schemes in Butcher form.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// Five-stage fourth-order low-storage scheme of Carpenter and Kennedy.
    #[default]
    LowStorage54,
    Classical4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RkScheme {
    /// strictly lower triangular, a[tau][sigma]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

// 2N-storage coefficients: dU = A_i dU + dt L(U); U += B_i dU
const LS_A: [f64; 5] = [
    0.0,
    -567301805773.0 / 1357537059087.0,
    -2404267990393.0 / 2016746695238.0,
    -3550918686646.0 / 2091501179385.0,
    -1275806237668.0 / 842570457699.0,
];
const LS_B: [f64; 5] = [
    1432997174477.0 / 9575080441755.0,
    5161836677717.0 / 13612068292357.0,
    1720146321549.0 / 2090206949498.0,
    3134564353537.0 / 4481467310338.0,
    2277821191437.0 / 14882151754819.0,
];
const LS_C: [f64; 5] = [
    0.0,
    1432997174477.0 / 9575080441755.0,
    2526269341429.0 / 6820363962896.0,
    2006345519317.0 / 3224310063776.0,
    2802321613138.0 / 2924317926251.0,
];

impl RkScheme {
    pub fn new(kind: SchemeKind) -> Self {
        match kind {
            SchemeKind::LowStorage54 => Self::from_low_storage(&LS_A, &LS_B, &LS_C),
            SchemeKind::Classical4 => RkScheme {
                a: vec![vec![], vec![0.5], vec![0.0, 0.5], vec![0.0, 0.0, 1.0]],
                b: vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
                c: vec![0.0, 0.5, 0.5, 1.0],
            },
        }
    }

    /// Butcher tableau of a 2N-storage scheme. The stage-i input is
    /// U0 + dt sum_{j<i} a_ij k_j with a_ij = sum_{l=j}^{i-1} B_l prod_{m=j+1}^{l} A_m.
    pub fn from_low_storage(a2n: &[f64], b2n: &[f64], c2n: &[f64]) -> Self {
        let s = b2n.len();
        let coef = |i: usize, j: usize| -> f64 {
            let mut sum = 0.0;
            for l in j..i {
                let mut prod = 1.0;
                for m in (j + 1)..=l {
                    prod *= a2n[m];
                }
                sum += b2n[l] * prod;
            }
            sum
        };
        let a = (0..s).map(|i| (0..i).map(|j| coef(i, j)).collect()).collect();
        let b = (0..s).map(|j| coef(s, j)).collect();
        RkScheme { a, b, c: c2n.to_vec() }
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.b.len();
        if s == 0 || self.c.len() != s || self.a.len() != s {
            return Err(Error::config("inconsistent Runge-Kutta tableau sizes"));
        }
        if self.a.iter().enumerate().any(|(i, row)| row.len() != i) {
            return Err(Error::config("Runge-Kutta matrix must be strictly lower triangular"));
        }
        if (self.b.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::config("Runge-Kutta weights must sum to one"));
        }
        Ok(())
    }
}
