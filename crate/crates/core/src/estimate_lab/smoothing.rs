use rayon::prelude::*;
use serde::Serialize;

use super::TestFamily;
use crate::fourier::spectrum;
use crate::grid_operator::Grid1D;
use crate::spectral_calculus::{BandProjectionSet, SpectralDecomposition};
use crate::{Error, Result};

/// `|<xi>^s u_hat|` with `<xi>^2 = e^2 + xi^2`.
pub fn sobolev_norm(u: &[f64], grid: &Grid1D, s: f64) -> f64 {
    let e2 = std::f64::consts::E.powi(2);
    let sp = spectrum(u, grid);
    sp.xi.iter().zip(&sp.power).map(|(x, p)| (e2 + x * x).powf(s) * p).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandSmoothing {
    pub j: usize,
    /// `max_u |P_j u|_{H^s2} / |P_j u|`.
    pub ratio: f64,
    pub worst_member: usize,
    pub eigenvalues: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothingReport {
    pub s2: f64,
    pub bands: Vec<BandSmoothing>,
    /// Ratio of the lowest nonempty band.
    pub base_constant: f64,
    /// Smallest `eps` with `K_j <= base e^{eps sqrt(e^j)}` for all bands.
    pub fitted_epsilon: f64,
    /// Least-squares slope of `ln K_j` against `j`.
    pub log_slope: f64,
}

fn band_ratio(bands: &BandProjectionSet, j: usize, s2: f64, family: &TestFamily) -> Result<BandSmoothing> {
    if j > bands.j_max() {
        return Err(Error::OutOfRange(format!("band {j} exceeds j_max = {}", bands.j_max())));
    }
    let count = bands.contributing(j).len();
    if count == 0 {
        return Err(Error::EmptyBand { j });
    }
    let grid = bands.decomposition.source.grid;
    let ratios: Vec<f64> = family
        .members
        .par_iter()
        .map(|m| {
            let u = &m.field.modes[0].values;
            let pu = bands.project(j, u);
            let l2 = (pu.iter().map(|v| v * v).sum::<f64>() * grid.spacing()).sqrt();
            if l2 > 1e-150 {
                sobolev_norm(&pu, &grid, s2) / l2
            } else {
                0.0
            }
        })
        .collect();
    let (mut ratio, mut worst) = (0.0, 0);
    for (i, &r) in ratios.iter().enumerate() {
        if r > ratio {
            ratio = r;
            worst = i;
        }
    }
    Ok(BandSmoothing { j, ratio, worst_member: worst, eigenvalues: count })
}

pub fn smoothing_ratio(dec: &SpectralDecomposition, j: usize, s2: f64, family: &TestFamily) -> Result<BandSmoothing> {
    if !(s2 > 0.0) {
        return Err(Error::OutOfRange(format!("s2 must be positive, got {s2}")));
    }
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    band_ratio(&BandProjectionSet::new(dec), j, s2, family)
}

/// All nonempty bands, with the growth fit.
pub fn smoothing_sweep(dec: &SpectralDecomposition, s2: f64, family: &TestFamily) -> Result<SmoothingReport> {
    if !(s2 > 0.0) {
        return Err(Error::OutOfRange(format!("s2 must be positive, got {s2}")));
    }
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let set = BandProjectionSet::new(dec);
    let bands: Vec<BandSmoothing> = set
        .cutoffs
        .bands()
        .filter(|&j| !set.contributing(j).is_empty())
        .map(|j| band_ratio(&set, j, s2, family))
        .collect::<Result<_>>()?;
    let measured: Vec<&BandSmoothing> = bands.iter().filter(|b| b.ratio > 0.0).collect();
    let base_constant = measured.first().map_or(0.0, |b| b.ratio);
    let fitted_epsilon = measured
        .iter()
        .map(|b| (b.ratio / base_constant).ln().max(0.0) / (b.j as f64).exp().sqrt())
        .fold(0.0, f64::max);
    let log_slope = if measured.len() >= 2 {
        let n = measured.len() as f64;
        let mj = measured.iter().map(|b| b.j as f64).sum::<f64>() / n;
        let ml = measured.iter().map(|b| b.ratio.ln()).sum::<f64>() / n;
        let sxy: f64 = measured.iter().map(|b| (b.j as f64 - mj) * (b.ratio.ln() - ml)).sum();
        let sxx: f64 = measured.iter().map(|b| (b.j as f64 - mj).powi(2)).sum();
        sxy / sxx
    } else {
        0.0
    };
    Ok(SmoothingReport { s2, bands, base_constant, fitted_epsilon, log_slope })
}
