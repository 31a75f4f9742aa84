//! Discrete Fourier transforms on periodic embeddings of grid functions.
//!
//! With `N` points of spacing `h`, frequencies are `xi_k = 2 pi k / (N h)`
//! (`k` folded to `(-N/2, N/2]`) and `|m(D) u|^2 = (h/N) sum_k m(xi_k)^2 |U_k|^2`,
//! so that `|u|^2 = h sum_i u_i^2`.

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::{E, PI};

use crate::grid_operator::{Boundary, Grid1D};

/// `log <xi>` for `xi2 = |xi|^2`; exactly 1 at the origin.
pub fn log_bracket(xi2: f64) -> f64 {
    1.0 + 0.5 * (xi2 / (E * E)).ln_1p()
}

pub fn frequencies(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let k = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
            2.0 * PI * k / (n as f64 * h)
        })
        .collect()
}

/// Power spectrum of a periodic sample: `(xi_k, (h/N)|U_k|^2)`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub xi: Vec<f64>,
    pub power: Vec<f64>,
}

impl Spectrum {
    pub fn norm2(&self) -> f64 {
        self.power.iter().sum()
    }

    /// `|m(D) u|^2` for a multiplier given in terms of `xi`.
    pub fn weighted(&self, m: impl Fn(f64) -> f64) -> f64 {
        self.xi.iter().zip(&self.power).map(|(&x, p)| m(x).powi(2) * p).sum()
    }
}

pub fn fft(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Embedding length used for functions on `grid`.
pub fn embedding_len(grid: &Grid1D) -> usize {
    match grid.boundary {
        Boundary::Periodic => grid.n,
        Boundary::Dirichlet => (2 * grid.n).next_power_of_two(),
    }
}

/// Places the unknowns of `grid` into the periodic embedding (zero boundary
/// nodes and zero padding for Dirichlet grids).
pub fn embed(u: &[f64], grid: &Grid1D) -> Vec<f64> {
    assert_eq!(u.len(), grid.dim(), "grid function length does not match grid");
    let mut out = vec![0.0; embedding_len(grid)];
    for (i, &v) in u.iter().enumerate() {
        out[grid.node_of(i)] = v;
    }
    out
}

pub fn spectrum(u: &[f64], grid: &Grid1D) -> Spectrum {
    let e = embed(u, grid);
    spectrum_periodic(&e, grid.spacing())
}

pub fn spectrum_periodic(values: &[f64], h: f64) -> Spectrum {
    let n = values.len();
    let f = fft(values);
    let scale = h / n as f64;
    Spectrum { xi: frequencies(n, h), power: f.iter().map(|c| c.norm_sqr() * scale).collect() }
}

/// 2-D forward transform (rows, then columns).
pub fn fft2(u: &DMatrix<f64>) -> DMatrix<Complex64> {
    let (rows, cols) = u.shape();
    let mut planner = FftPlanner::new();
    let row_plan = planner.plan_fft_forward(cols);
    let col_plan = planner.plan_fft_forward(rows);
    let mut out = u.map(|v| Complex64::new(v, 0.0));
    let mut buf = vec![Complex64::new(0.0, 0.0); cols.max(rows)];
    for r in 0..rows {
        for c in 0..cols {
            buf[c] = out[(r, c)];
        }
        row_plan.process(&mut buf[..cols]);
        for c in 0..cols {
            out[(r, c)] = buf[c];
        }
    }
    for c in 0..cols {
        for r in 0..rows {
            buf[r] = out[(r, c)];
        }
        col_plan.process(&mut buf[..rows]);
        for r in 0..rows {
            out[(r, c)] = buf[r];
        }
    }
    out
}
