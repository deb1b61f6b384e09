//! Entropy-stable moving-mesh discontinuous Galerkin spectral element and
//! ALE finite-volume solvers for the compressible Euler and shallow-water
//! equations.

pub mod cases;
pub mod cli;
pub mod dgsem;
pub mod diagnostics;
pub mod error;
pub mod fluxes;
pub mod fv1d;
pub mod mesh;
pub mod operators;
pub mod physics;
pub mod rk;
pub mod scenarios;

pub use error::{Error, Result};
