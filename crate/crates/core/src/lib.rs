//! Numerical toolkit for operators of the form
//! `L = -a2(x)d_x^2 + a1(x)d_x + a0(x) + g(x) L2(y)`.
//!
//! The crate realizes the self-adjoint part `L2` as a symmetric matrix on a
//! grid and builds its spectral calculus and operator-adapted bands. On top
//! of that it solves the spectral ODE in `x` with growth certificates,
//! assembles null solutions `w = v(x, B) u`, and measures the functional
//! inequalities that connect them.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod estimate_lab;
pub mod export;
pub mod fourier;
pub mod grid_operator;
pub mod interpolation;
pub mod scenario;
pub mod solution_builder;
pub mod spectral_calculus;
pub mod spectral_ode;

pub use error::{Error, Result};

/// `<t> = sqrt(e^2 + t^2)`.
#[inline]
pub fn japanese_bracket(t: f64) -> f64 {
    (std::f64::consts::E * std::f64::consts::E + t * t).sqrt()
}
