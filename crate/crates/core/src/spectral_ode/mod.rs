//! The spectral ODE `v'' = a1 v' + (a0 + g lambda) v`, `v(x0) = 1`,
//! `v'(x0) = 0`, with growth certificates.
//!
//! Integration runs in the energy coordinates `z = (v, v'/s)` with
//! `s = <lambda>^{1/2}`, where the system matrix is
//! `Phi_s = [[0, s], [a/s, a1]]` and `|Phi_s|` scales like `<lambda>^{1/2}`.

mod certificate;
mod dopri;

pub use certificate::{certify_growth, derivative_cascade, CascadeResult, GrowthCertificate};

use rayon::prelude::*;
use serde::Serialize;

use crate::grid_operator::CoefficientBundleX;
use crate::{japanese_bracket, Error, Result};

pub const DEFAULT_SAMPLES: usize = 201;
const RATE_FINE_POINTS: usize = 1025;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OdeOptions {
    pub tol: f64,
    /// Output nodes on `[x0 - r, x0 + r]`; forced odd so `x0` is a node.
    pub samples: usize,
    /// Above this value of `M r` the solution is stored damped by `e^{-M|x - x0|}`.
    pub damping_threshold: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { tol: 1e-10, samples: DEFAULT_SAMPLES, damping_threshold: 500.0 }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions { tol, ..Default::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralOdeSolution {
    pub lambda: f64,
    pub x0: f64,
    pub radius: f64,
    pub x: Vec<f64>,
    /// `v` at the samples, multiplied by `e^{-damping |x - x0|}`.
    pub v: Vec<f64>,
    /// `v'` at the samples, same damping as `v`.
    pub dv: Vec<f64>,
    pub damping: f64,
    /// `s = <lambda>^{1/2}`.
    pub scale: f64,
    pub complete: bool,
    pub steps: usize,
    pub rejected_steps: usize,
    #[serde(skip)]
    pub bundle: CoefficientBundleX,
    pub certificate: GrowthCertificate,
}

impl SpectralOdeSolution {
    pub fn center_index(&self) -> usize {
        self.x.len() / 2
    }

    pub fn offset(&self, i: usize) -> f64 {
        (self.x[i] - self.x0).abs()
    }

    /// Undamped `v` (may overflow for huge growth).
    pub fn value(&self, i: usize) -> f64 {
        self.v[i] * (self.damping * self.offset(i)).exp()
    }

    pub fn derivative(&self, i: usize) -> f64 {
        self.dv[i] * (self.damping * self.offset(i)).exp()
    }

    /// `ln |(v, v')|_2` at sample `i`, overflow-free.
    pub fn log_state_norm(&self, i: usize) -> f64 {
        self.v[i].hypot(self.dv[i]).ln() + self.damping * self.offset(i)
    }

    /// `ln |(v, v'/s)|_2` at sample `i`.
    pub fn log_energy_norm(&self, i: usize) -> f64 {
        self.v[i].hypot(self.dv[i] / self.scale).ln() + self.damping * self.offset(i)
    }

    pub fn sample_spacing(&self) -> f64 {
        self.x[1] - self.x[0]
    }
}

/// Largest singular value of `[[a, b], [c, d]]`.
pub fn spectral_norm_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    0.5 * (((a + d).powi(2) + (c - b).powi(2)).sqrt() + ((a - d).powi(2) + (b + c).powi(2)).sqrt())
}

/// `|Phi_s(x)|_2` for `Phi_s = [[0, s], [a/s, a1]]`.
pub fn scaled_phi_norm(bundle: &CoefficientBundleX, lambda: f64, s: f64, x: f64) -> f64 {
    spectral_norm_2x2(0.0, s, bundle.potential(x, lambda) / s, bundle.a1.eval(x))
}

/// `|Phi(x)|_2` for `Phi = [[0, 1], [a, a1]]`.
pub fn raw_phi_norm(bundle: &CoefficientBundleX, lambda: f64, x: f64) -> f64 {
    spectral_norm_2x2(0.0, 1.0, bundle.potential(x, lambda), bundle.a1.eval(x))
}

pub(crate) fn sample_nodes(x0: f64, radius: f64, samples: usize) -> Vec<f64> {
    let n = if samples.is_multiple_of(2) { samples + 1 } else { samples }.max(3);
    let half = (n / 2) as f64;
    (0..n).map(|i| x0 + radius * (i as f64 - half) / half).collect()
}

/// Points where `sup_x |Phi|` is evaluated: the output nodes and a fine
/// uniform grid on the same interval.
pub(crate) fn rate_points(x0: f64, radius: f64, nodes: &[f64]) -> Vec<f64> {
    let mut pts = nodes.to_vec();
    pts.extend((0..RATE_FINE_POINTS).map(|i| x0 - radius + 2.0 * radius * i as f64 / (RATE_FINE_POINTS - 1) as f64));
    pts
}

/// `(sup |Phi_s|, sup |Phi|)` over `[x0 - r, x0 + r]`.
pub fn growth_rates(bundle: &CoefficientBundleX, lambda: f64, radius: f64, nodes: &[f64]) -> (f64, f64) {
    let s = japanese_bracket(lambda).sqrt();
    rate_points(bundle.x0, radius, nodes).iter().fold((0.0f64, 0.0f64), |(m, raw), &x| {
        (m.max(scaled_phi_norm(bundle, lambda, s, x)), raw.max(raw_phi_norm(bundle, lambda, x)))
    })
}

fn check_inputs(bundle: &CoefficientBundleX, lambda: f64, radius: f64, tol: f64) -> Result<()> {
    if !bundle.is_normalized() {
        return Err(Error::InvalidInput("coefficient bundle must have a2 = 1 (normalize it first)".into()));
    }
    if !(lambda >= 1.0) || !lambda.is_finite() {
        return Err(Error::OutOfRange(format!("lambda must be >= 1, got {lambda}")));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::OutOfRange(format!("radius must be positive, got {radius}")));
    }
    if !(1e-12..=1e-4).contains(&tol) {
        return Err(Error::OutOfRange(format!("tolerance must lie in [1e-12, 1e-4], got {tol}")));
    }
    Ok(())
}

pub fn solve_ivp(bundle: &CoefficientBundleX, lambda: f64, radius: f64, tol: f64) -> Result<SpectralOdeSolution> {
    solve_ivp_with(bundle, lambda, radius, &OdeOptions::with_tol(tol))
}

pub fn solve_ivp_with(
    bundle: &CoefficientBundleX,
    lambda: f64,
    radius: f64,
    options: &OdeOptions,
) -> Result<SpectralOdeSolution> {
    check_inputs(bundle, lambda, radius, options.tol)?;
    let x0 = bundle.x0;
    let s = japanese_bracket(lambda).sqrt();
    let x = sample_nodes(x0, radius, options.samples);
    let (rate, _) = growth_rates(bundle, lambda, radius, &x);
    let damping = if rate * radius > options.damping_threshold { rate } else { 0.0 };
    let half = x.len() / 2;
    // both sides integrate in t = |x - x0|
    let offsets: Vec<f64> = x[half..].iter().map(|xi| xi - x0).collect();
    let h_init = (0.1 * options.tol.powf(0.2) / (1.0 + rate)).min(offsets[1]);

    let side = |sign: f64| {
        let rhs = move |t: f64, z: &dopri::State| {
            let xi = x0 + sign * t;
            let a = bundle.potential(xi, lambda);
            let a1 = bundle.a1.eval(xi);
            [sign * s * z[1] - damping * z[0], sign * (a / s * z[0] + a1 * z[1]) - damping * z[1]]
        };
        dopri::integrate(rhs, [1.0, 0.0], &offsets, options.tol, h_init)
    };
    let (fwd, bwd) = rayon::join(|| side(1.0), || side(-1.0));

    let n = x.len();
    let mut v = vec![f64::NAN; n];
    let mut dv = vec![f64::NAN; n];
    for (k, z) in fwd.states.iter().enumerate() {
        v[half + k] = z[0];
        dv[half + k] = s * z[1];
    }
    for (k, z) in bwd.states.iter().enumerate() {
        v[half - k] = z[0];
        dv[half - k] = s * z[1];
    }
    let complete = fwd.failed_at.is_none() && bwd.failed_at.is_none();
    let mut sol = SpectralOdeSolution {
        lambda,
        x0,
        radius,
        x,
        v,
        dv,
        damping,
        scale: s,
        complete,
        steps: fwd.steps + bwd.steps,
        rejected_steps: fwd.rejected + bwd.rejected,
        bundle: bundle.clone(),
        certificate: GrowthCertificate::default(),
    };
    sol.certificate = certify_growth(&sol);
    Ok(sol)
}

/// Independent solves for every `lambda`, in input order.
pub fn solve_sweep(
    bundle: &CoefficientBundleX,
    lambdas: &[f64],
    radius: f64,
    options: &OdeOptions,
) -> Result<Vec<SpectralOdeSolution>> {
    lambdas.par_iter().map(|&l| solve_ivp_with(bundle, l, radius, options)).collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub lambda: f64,
    #[serde(rename = "M")]
    pub rate: f64,
    pub raw_rate: f64,
    #[serde(rename = "C_x0")]
    pub c_x0: f64,
    pub certified: bool,
}

pub fn sweep_summary(solutions: &[SpectralOdeSolution]) -> Vec<SweepEntry> {
    solutions
        .iter()
        .map(|s| SweepEntry {
            lambda: s.lambda,
            rate: s.certificate.rate,
            raw_rate: s.certificate.raw_rate,
            c_x0: s.certificate.c_x0,
            certified: s.certificate.certified,
        })
        .collect()
}
