//! The two Cauchy-Schwarz inequalities that split `|log<xi> u_hat|^2` at the
//! frequency-dependent band index `R(xi)`, and the assembled estimate
//! `|log<xi> u_hat|^2 <= eps <L2 u, u> + C |u|^2`.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::E;

use rand::Rng;

use crate::estimate_lab::{bump, log_norm, sobolev_norm, support_box};
use crate::fourier::{embed, fft, frequencies, log_bracket};
use crate::grid_operator::Grid1D;
use crate::spectral_calculus::{decompose, BandProjectionSet, SpectralDecomposition};
use crate::grid_operator::DiscreteOperator;
use crate::{Error, Result};

const SLACK: f64 = 1e-10;
const SWEEP_POINTS: usize = 4000;
const SWEEP_LOG_MAX: f64 = 40.0;

/// `R(xi) = 2 ln(s2 log<xi> / (2 eps))`, clamped at 0.
pub fn split_index(xi: f64, s2: f64, epsilon: f64) -> f64 {
    (2.0 * (s2 * log_bracket(xi * xi) / (2.0 * epsilon)).ln()).max(0.0)
}

/// Where the high-band sum starts for a real cut `R`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EndpointConvention {
    /// `k >= ceil(R)`: both sums contain `k = R` when `R` is an integer.
    Shared,
    /// `k >= floor(R) + 1`: the two sums partition the bands.
    #[default]
    Partition,
}

impl EndpointConvention {
    pub fn high_start(self, r: f64) -> usize {
        match self {
            EndpointConvention::Shared => r.ceil() as usize,
            EndpointConvention::Partition => r.floor() as usize + 1,
        }
    }
}

/// Functions `alpha_0, ..., alpha_K` on a common grid with their norms.
#[derive(Clone, Debug)]
pub struct BandSequence {
    pub grid: Grid1D,
    pub alpha: Vec<Vec<f64>>,
    pub s2: f64,
    /// `|alpha_k|`.
    pub l2: Vec<f64>,
    /// `|alpha_k|_{H^s2}` with the `<xi>` weight.
    pub hs: Vec<f64>,
    xi: Vec<f64>,
    transforms: Vec<Vec<Complex64>>,
    weight: f64,
}

impl BandSequence {
    pub fn new(grid: &Grid1D, alpha: Vec<Vec<f64>>, s2: f64) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidInput("band sequence is empty".into()));
        }
        if !(s2 > 0.0) {
            return Err(Error::OutOfRange(format!("s2 must be positive, got {s2}")));
        }
        if alpha.iter().any(|a| a.len() != grid.dim()) {
            return Err(Error::InvalidInput("band function length does not match grid".into()));
        }
        if alpha.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("band function values must be finite".into()));
        }
        let h = grid.spacing();
        let transforms: Vec<Vec<Complex64>> = alpha.iter().map(|a| fft(&embed(a, grid))).collect();
        let n = transforms[0].len();
        let l2 = alpha.iter().map(|a| (a.iter().map(|v| v * v).sum::<f64>() * h).sqrt()).collect();
        let hs = alpha.iter().map(|a| sobolev_norm(a, grid, s2)).collect();
        Ok(BandSequence { grid: *grid, alpha, s2, l2, hs, xi: frequencies(n, h), transforms, weight: h / n as f64 })
    }

    /// `alpha_j = P_j u` for all bands.
    pub fn from_bands(u: &[f64], bands: &BandProjectionSet, s2: f64) -> Result<Self> {
        Self::new(&bands.decomposition.source.grid, bands.project_all(u), s2)
    }

    /// `count` random windowed oscillations, the `k`-th near frequency `e^{k/2}`.
    pub fn random(grid: &Grid1D, count: usize, s2: f64, rng: &mut impl Rng) -> Result<Self> {
        let (a, b) = support_box(grid);
        let pts = grid.points();
        let nyquist = 0.8 * std::f64::consts::PI / grid.spacing();
        let alpha = (0..count)
            .map(|k| {
                let amp: f64 = rng.gen_range(-1.0..1.0);
                let freq = ((0.5 * k as f64).exp() * rng.gen_range(0.5..2.0)).min(nyquist);
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                let shift = rng.gen_range(-0.1..0.1) * (b - a);
                pts.iter()
                    .map(|&y| amp * (freq * y + phase).cos() * bump((2.0 * (y - shift) - a - b) / (b - a) * 1.25))
                    .collect()
            })
            .collect();
        Self::new(grid, alpha, s2)
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// `sum_xi log^2<xi> |sum_{k in range(xi)} alpha_k_hat(xi)|^2` in grid units.
    fn truncated_log_sum(&self, range: impl Fn(f64) -> (usize, usize)) -> f64 {
        let kmax = self.len();
        let mut total = 0.0;
        for (q, &xi) in self.xi.iter().enumerate() {
            let (lo, hi) = range(xi);
            let hi = hi.min(kmax);
            if lo >= hi {
                continue;
            }
            let mut s = Complex64::new(0.0, 0.0);
            for k in lo..hi {
                s += self.transforms[k][q];
            }
            total += log_bracket(xi * xi).powi(2) * s.norm_sqr();
        }
        total * self.weight
    }

    /// Squared low and high parts for the partition convention.
    pub fn split_parts(&self, epsilon: f64) -> (f64, f64) {
        let s2 = self.s2;
        let low = self.truncated_log_sum(|xi| (0, split_index(xi, s2, epsilon).floor() as usize + 1));
        let high = self.truncated_log_sum(|xi| (split_index(xi, s2, epsilon).floor() as usize + 1, usize::MAX));
        (low, high)
    }

    /// `|log<xi> (sum_k alpha_k)^|^2`.
    pub fn total_log_norm2(&self) -> f64 {
        self.truncated_log_sum(|_| (0, usize::MAX))
    }

    fn frequency_grid(&self) -> &[f64] {
        &self.xi
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    /// Value of the constant's displayed chain expression, for reference.
    pub chain_constant: f64,
    pub ratio: f64,
    pub holds: bool,
}

fn report(lhs: f64, rhs: f64, constant: f64, chain_constant: f64) -> InequalityReport {
    let ratio = if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
    InequalityReport { lhs, rhs, constant, chain_constant, ratio, holds: lhs <= rhs * (1.0 + SLACK) }
}

fn sweep_frequencies(grid_xi: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = grid_xi.iter().map(|x| x.abs()).collect();
    pts.push(0.0);
    pts.extend((0..SWEEP_POINTS).map(|i| (-5.0 + (SWEEP_LOG_MAX + 5.0) * i as f64 / (SWEEP_POINTS - 1) as f64).exp()));
    pts
}

fn low_term(xi: f64, s2: f64, epsilon: f64) -> f64 {
    let lb = log_bracket(xi * xi);
    let bracket_s = (s2 * lb).exp();
    let r = split_index(xi, s2, epsilon);
    lb * lb * (r.floor() + 1.0) * (2.0 * epsilon).exp().max(bracket_s) / (bracket_s * bracket_s)
}

/// `sup_xi log^2<xi> (floor R + 1) max(e^{2 eps}, <xi>^s2) / <xi>^{2 s2}` over
/// `frequencies` and a dense logarithmic sweep.
pub fn low_band_constant(epsilon: f64, s2: f64, frequencies: &[f64]) -> f64 {
    sweep_frequencies(frequencies).iter().map(|&xi| low_term(xi, s2, epsilon)).fold(0.0, f64::max)
}

/// `sup_xi log^2<xi> R(xi) / <xi>^s2`.
pub fn low_band_chain_constant(epsilon: f64, s2: f64, frequencies: &[f64]) -> f64 {
    sweep_frequencies(frequencies)
        .iter()
        .map(|&xi| {
            let lb = log_bracket(xi * xi);
            lb * lb * 2.0 * (s2 * lb / (2.0 * epsilon)).ln() / (s2 * lb).exp()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `3 (4 eps / s2)^2`.
pub fn high_band_constant(epsilon: f64, s2: f64) -> f64 {
    3.0 * (4.0 * epsilon / s2).powi(2)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::OutOfRange(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

/// `|sum_{k <= R} log<xi> alpha_k_hat|^2 <= C(eps, s2) sum e^{-2 eps sqrt(e^k)} |alpha_k|_{H^s2}^2`.
pub fn low_band_inequality(seq: &BandSequence, epsilon: f64) -> Result<InequalityReport> {
    check_epsilon(epsilon)?;
    let s2 = seq.s2;
    let lhs = seq.truncated_log_sum(|xi| (0, split_index(xi, s2, epsilon).floor() as usize + 1));
    let constant = low_band_constant(epsilon, s2, seq.frequency_grid());
    let chain = low_band_chain_constant(epsilon, s2, seq.frequency_grid());
    let sum: f64 = seq
        .hs
        .iter()
        .enumerate()
        .map(|(k, n)| (-2.0 * epsilon * (k as f64).exp().sqrt()).exp() * n * n)
        .sum();
    Ok(report(lhs, constant * sum, constant, chain))
}

/// `|sum_{k >= R} log<xi> alpha_k_hat|^2 <= 3 (4 eps/s2)^2 sum e^k |alpha_k|^2`.
pub fn high_band_inequality(seq: &BandSequence, epsilon: f64, convention: EndpointConvention) -> Result<InequalityReport> {
    check_epsilon(epsilon)?;
    let s2 = seq.s2;
    let lhs = seq.truncated_log_sum(|xi| (convention.high_start(split_index(xi, s2, epsilon)), usize::MAX));
    let constant = high_band_constant(epsilon, s2);
    let sum: f64 = seq.l2.iter().enumerate().map(|(k, n)| (k as f64).exp() * n * n).sum();
    Ok(report(lhs, constant * sum, constant, constant))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandContribution {
    pub j: usize,
    /// `|P_j u|^2`.
    pub mass: f64,
    /// `|P_j u|_{H^s2} / |P_j u|`.
    pub smoothing: f64,
    /// `96 (eps'/s2)^2 e^j |P_j u|^2`.
    pub low_frequency_term: f64,
    /// `2 C(eps') e^{-2 eps' sqrt(e^j)} |P_j u|_{H^s2}^2`.
    pub high_frequency_term: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssemblyReport {
    pub epsilon: f64,
    pub s2: f64,
    /// Split parameter `eps' = s2 sqrt(eps / (96 e))`.
    pub epsilon_prime: f64,
    /// `|log<xi> u_hat|^2`, computed directly.
    pub logterm: f64,
    /// `<L2 u, u>`.
    pub form: f64,
    pub norm2: f64,
    /// Twice the measured high-band part.
    #[serde(rename = "I")]
    pub i_measured: f64,
    /// Bound on I through the band masses; at most `eps <L2 u, u>`.
    pub i_bound: f64,
    /// Twice the measured low-band part.
    #[serde(rename = "II")]
    pub ii_measured: f64,
    pub ii_bound: f64,
    /// `C(eps', s2)`.
    pub low_band_constant: f64,
    /// `2 C(eps') max_j e^{-2 eps' sqrt(e^j)} K_j^2`.
    #[serde(rename = "measured_C")]
    pub measured_c: f64,
    pub i_within_form: bool,
    pub chain_holds: bool,
    pub holds: bool,
    pub bands: Vec<BandContribution>,
}

pub fn assemble_theorem(u: &[f64], op: &DiscreteOperator, s2: f64, epsilon: f64) -> Result<AssemblyReport> {
    let dec = decompose(op)?;
    assemble_theorem_with(u, &dec, s2, epsilon)
}

/// Same as [`assemble_theorem`] with a precomputed decomposition.
pub fn assemble_theorem_with(u: &[f64], dec: &SpectralDecomposition, s2: f64, epsilon: f64) -> Result<AssemblyReport> {
    check_epsilon(epsilon)?;
    let grid = dec.source.grid;
    check_support(u, &grid)?;
    let h = grid.spacing();
    let bands = BandProjectionSet::new(dec);
    let seq = BandSequence::from_bands(u, &bands, s2)?;
    let eps_p = s2 * (epsilon / (96.0 * E)).sqrt();
    let logterm = log_norm(u, &grid).powi(2);
    let form = dec.source.form(u) * h;
    let norm2 = u.iter().map(|v| v * v).sum::<f64>() * h;
    let (low, high) = seq.split_parts(eps_p);
    let c_low = low_band_constant(eps_p, s2, seq.frequency_grid());
    let c_high = high_band_constant(eps_p, s2);
    let mut contributions = Vec::with_capacity(seq.len());
    let mut max_factor: f64 = 0.0;
    for j in 0..seq.len() {
        let mass = seq.l2[j].powi(2);
        let smoothing = if seq.l2[j] > 0.0 { seq.hs[j] / seq.l2[j] } else { 0.0 };
        let damp = (-2.0 * eps_p * (j as f64).exp().sqrt()).exp();
        if mass > 0.0 {
            max_factor = max_factor.max(damp * smoothing * smoothing);
        }
        contributions.push(BandContribution {
            j,
            mass,
            smoothing,
            low_frequency_term: 2.0 * c_high * (j as f64).exp() * mass,
            high_frequency_term: 2.0 * c_low * damp * seq.hs[j].powi(2),
        });
    }
    let i_bound: f64 = contributions.iter().map(|b| b.low_frequency_term).sum();
    let ii_bound: f64 = contributions.iter().map(|b| b.high_frequency_term).sum();
    let measured_c = 2.0 * c_low * max_factor;
    let scale = logterm.max(f64::MIN_POSITIVE);
    let i_within_form = i_bound <= epsilon * form + SLACK * scale;
    let chain_holds = logterm <= 2.0 * (low + high) + SLACK * scale
        && 2.0 * high <= i_bound + SLACK * scale
        && 2.0 * low <= ii_bound + SLACK * scale
        && ii_bound <= measured_c * norm2 + SLACK * scale;
    let holds = logterm <= epsilon * form + measured_c * norm2 + SLACK * scale;
    Ok(AssemblyReport {
        epsilon,
        s2,
        epsilon_prime: eps_p,
        logterm,
        form,
        norm2,
        i_measured: 2.0 * high,
        i_bound,
        ii_measured: 2.0 * low,
        ii_bound,
        low_band_constant: c_low,
        measured_c,
        i_within_form,
        chain_holds,
        holds,
        bands: contributions,
    })
}

fn check_support(u: &[f64], grid: &Grid1D) -> Result<()> {
    let (a, b) = support_box(grid);
    let peak = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (y, v) in grid.points().iter().zip(u) {
        if (*y < a || *y > b) && v.abs() > 1e-12 * peak {
            return Err(Error::Support(format!("u({y}) = {v} lies outside [{a}, {b}]")));
        }
    }
    Ok(())
}
