use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::fourier::{fft2, frequencies};
use crate::{Error, Result};

/// `(1 + xi^2)^{s1} (1 + eta^2)^{s2} / (1 + xi^2 + eta^2)^{s1 + s2}`.
pub fn sobolev_multiplier(s1: f64, s2: f64, xi: f64, eta: f64) -> f64 {
    let d = 1.0 + xi * xi + eta * eta;
    ((1.0 + xi * xi) / d).powf(s1) * ((1.0 + eta * eta) / d).powf(s2)
}

/// Supremum of the multiplier over `xi_grid x eta_grid`.
pub fn sobolev_multiplier_check(s1: f64, s2: f64, xi_grid: &[f64], eta_grid: &[f64]) -> Result<f64> {
    if !(s1 >= 0.0 && s2 >= 0.0) {
        return Err(Error::OutOfRange(format!("s1, s2 must be >= 0, got {s1}, {s2}")));
    }
    Ok(xi_grid
        .par_iter()
        .map(|&xi| eta_grid.iter().map(|&eta| sobolev_multiplier(s1, s2, xi, eta)).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max))
}

/// `C_{s1,s2}^2 = (1/Lx) sum_xi (1 + xi^2)^{-2 s1}` over the `nx` frequencies
/// of a periodic `x` grid of length `lx`.
pub fn sobolev_constant(nx: usize, lx: f64, s1: f64) -> Result<f64> {
    if !(s1 > 0.5) {
        return Err(Error::OutOfRange(format!("s1 must exceed 1/2, got {s1}")));
    }
    let s: f64 = frequencies(nx, lx / nx as f64).iter().map(|xi| (1.0 + xi * xi).powf(-2.0 * s1)).sum();
    Ok((s / lx).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MixedNormReport {
    /// `max_x |u(x, .)|_{H^s2}`.
    pub lhs: f64,
    /// `C |u|_{H^{s1 + s2}}`.
    pub rhs: f64,
    pub constant: f64,
    pub ratio: f64,
    pub holds: bool,
}

/// Periodic samples `u[(i, l)] = u(i Lx/nx, l Ly/ny)`; norms with weights
/// `(1 + |xi|^2)^s` on the Fourier side.
pub fn mixed_norm_check(u: &DMatrix<f64>, lx: f64, ly: f64, s1: f64, s2: f64) -> Result<MixedNormReport> {
    if !(s2 >= 0.0) {
        return Err(Error::OutOfRange(format!("s2 must be >= 0, got {s2}")));
    }
    let (nx, ny) = u.shape();
    let constant = sobolev_constant(nx, lx, s1)?;
    let hx = lx / nx as f64;
    let hy = ly / ny as f64;
    let xi = frequencies(nx, hx);
    let eta = frequencies(ny, hy);
    let s = s1 + s2;
    let f = fft2(u);
    let mut total = 0.0;
    for r in 0..nx {
        for c in 0..ny {
            total += (1.0 + xi[r] * xi[r] + eta[c] * eta[c]).powf(2.0 * s) * f[(r, c)].norm_sqr();
        }
    }
    let rhs_norm = (total * hx * hy / (nx * ny) as f64).sqrt();
    let mut planner = rustfft::FftPlanner::new();
    let plan = planner.plan_fft_forward(ny);
    let mut lhs: f64 = 0.0;
    for r in 0..nx {
        let mut row: Vec<rustfft::num_complex::Complex64> =
            (0..ny).map(|c| rustfft::num_complex::Complex64::new(u[(r, c)], 0.0)).collect();
        plan.process(&mut row);
        let n2: f64 = row.iter().zip(&eta).map(|(z, e)| (1.0 + e * e).powf(2.0 * s2) * z.norm_sqr()).sum();
        lhs = lhs.max((n2 * hy / ny as f64).sqrt());
    }
    let rhs = constant * rhs_norm;
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(MixedNormReport { lhs, rhs, constant, ratio, holds: lhs <= rhs * (1.0 + 1e-12) })
}
