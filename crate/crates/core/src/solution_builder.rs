//! Null solutions `w(x, y) = v(x, B) u(y)` assembled from the spectral ODE.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid_operator::{CoefficientBundleX, DiscreteOperator, Grid1D};
use crate::japanese_bracket;
use crate::spectral_calculus::{BandProjectionSet, SpectralDecomposition};
use crate::spectral_ode::{growth_rates, solve_ivp_with, OdeOptions, SpectralOdeSolution};
use crate::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandSelection {
    #[default]
    All,
    List(Vec<usize>),
}

impl BandSelection {
    pub fn single(j: usize) -> Self {
        BandSelection::List(vec![j])
    }

    fn resolve(&self, bands: &BandProjectionSet) -> Result<Vec<usize>> {
        match self {
            BandSelection::All => Ok(bands.cutoffs.bands().collect()),
            BandSelection::List(js) => {
                if js.is_empty() {
                    return Err(Error::InvalidInput("band selection is empty".into()));
                }
                let mut js = js.clone();
                js.sort_unstable();
                js.dedup();
                if let Some(&j) = js.iter().find(|&&j| j > bands.j_max()) {
                    return Err(Error::OutOfRange(format!("band {j} exceeds j_max = {}", bands.j_max())));
                }
                Ok(js)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BuildOptions {
    pub ode: OdeOptions,
    /// Overrides `r = eps / (2 C_x0)`.
    pub radius: Option<f64>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { ode: OdeOptions { tol: 1e-11, ..Default::default() }, radius: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralTerm {
    pub k: usize,
    pub lambda: f64,
    /// `<u, e_k>`.
    pub coefficient: f64,
    /// `sum_{j selected} psi_j(lambda_k)`.
    pub band_weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentialWeight {
    /// `|e^{eps sqrt(B)} u|`, infinite on overflow.
    pub value: f64,
    pub log_value: f64,
    pub overflow: bool,
}

#[derive(Clone, Debug)]
pub struct SpectralSolution {
    pub bands: Vec<usize>,
    pub epsilon: f64,
    pub radius: f64,
    pub c_x0: f64,
    pub terms: Vec<SpectralTerm>,
    pub odes: Vec<SpectralOdeSolution>,
    pub x: Vec<f64>,
    pub grid: Grid1D,
    /// Coordinates of the `y` unknowns.
    pub y: Vec<f64>,
    /// `w(x_i, y_l)`, rows indexed by `x`.
    pub values: DMatrix<f64>,
    /// Analytic `d_x w` from the stored `v'`.
    pub dx: DMatrix<f64>,
    /// `|e^{eps sqrt(B)} u_sel|` of the selected part of `u`.
    pub exponential_weight: ExponentialWeight,
    /// Eigenvectors of the contributing terms, as columns.
    pub basis: DMatrix<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    /// `|Lw| / |w|` with `d_x^2 w` from the ODE relation.
    pub analytic: f64,
    /// `|Lw| / |w|` with centred second differences in `x` (interior rows).
    pub finite_difference: f64,
    /// Largest modulus of the `y` part `g B_y w` (zero means decoupled).
    pub y_part: f64,
    pub x_spacing: f64,
}

fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `max_k sup |Phi_s| / <lambda_k>^{1/2}` over the bundle's working interval.
pub fn interval_constant(bundle: &CoefficientBundleX, lambdas: &[f64]) -> f64 {
    let nodes = [bundle.x0];
    lambdas
        .par_iter()
        .map(|&l| growth_rates(bundle, l, bundle.radius, &nodes).0 / japanese_bracket(l).sqrt())
        .reduce(|| 0.0, f64::max)
}

pub fn build_solution(
    u: &[f64],
    bands: &BandSelection,
    dec: &SpectralDecomposition,
    bundle: &CoefficientBundleX,
    epsilon: f64,
) -> Result<SpectralSolution> {
    build_solution_with(u, bands, dec, bundle, epsilon, &BuildOptions::default())
}

pub fn build_solution_with(
    u: &[f64],
    bands: &BandSelection,
    dec: &SpectralDecomposition,
    bundle: &CoefficientBundleX,
    epsilon: f64,
    options: &BuildOptions,
) -> Result<SpectralSolution> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::OutOfRange(format!("epsilon must be positive, got {epsilon}")));
    }
    if u.len() != dec.dim() {
        return Err(Error::InvalidInput(format!("u has {} values, operator has {} unknowns", u.len(), dec.dim())));
    }
    let set = BandProjectionSet::new(dec);
    let selected = bands.resolve(&set)?;
    let coefficients = dec.coefficients(u);
    let terms: Vec<SpectralTerm> = (0..dec.dim())
        .filter_map(|k| {
            let band_weight: f64 = selected.iter().map(|&j| set.weights(j)[k]).sum();
            (band_weight > 0.0).then(|| SpectralTerm {
                k,
                lambda: dec.eigenvalues[k],
                coefficient: coefficients[k],
                band_weight,
            })
        })
        .collect();
    if terms.is_empty() {
        return Err(Error::EmptyBand { j: selected[0] });
    }
    let lambdas: Vec<f64> = terms.iter().map(|t| t.lambda).collect();
    let c_x0 = interval_constant(bundle, &lambdas);
    let radius = match options.radius {
        Some(r) => r,
        // C_x0 was measured on the working interval, so stay inside it
        None if c_x0 > 0.0 => (epsilon / (2.0 * c_x0)).min(bundle.radius),
        None => bundle.radius,
    };
    let odes: Vec<SpectralOdeSolution> =
        lambdas.par_iter().map(|&l| solve_ivp_with(bundle, l, radius, &options.ode)).collect::<Result<_>>()?;
    if let Some(bad) = odes.iter().find(|s| !s.certificate.certified) {
        return Err(Error::CertificateFailed {
            lambda: bad.lambda,
            worst_ratio: bad.certificate.worst_ratio.max(bad.certificate.worst_raw_ratio),
        });
    }
    let x = odes[0].x.clone();
    let nx = x.len();
    let nt = terms.len();
    // amplitude of each eigenvector at each x, then one product with the eigenvectors
    let mut amp = DMatrix::zeros(nt, nx);
    let mut damp = DMatrix::zeros(nt, nx);
    for (t, (term, ode)) in terms.iter().zip(&odes).enumerate() {
        let c = term.coefficient * term.band_weight;
        for i in 0..nx {
            amp[(t, i)] = c * ode.value(i);
            damp[(t, i)] = c * ode.derivative(i);
        }
    }
    let basis = select_columns(&dec.eigenvectors, &terms);
    let values = (&basis * amp).transpose();
    let dx = (&basis * damp).transpose();
    let selected_coeffs: Vec<f64> = terms.iter().map(|t| t.coefficient * t.band_weight).collect();
    let exponential_weight = weight_from_coefficients(&selected_coeffs, &lambdas, epsilon);
    Ok(SpectralSolution {
        bands: selected,
        epsilon,
        radius,
        c_x0,
        terms,
        odes,
        x,
        grid: dec.source.grid,
        y: dec.source.grid.points(),
        values,
        dx,
        exponential_weight,
        basis,
    })
}

fn select_columns(v: &DMatrix<f64>, terms: &[SpectralTerm]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(v.nrows(), terms.len());
    for (t, term) in terms.iter().enumerate() {
        out.set_column(t, &v.column(term.k));
    }
    out
}

impl SpectralSolution {
    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn center_index(&self) -> usize {
        self.x.len() / 2
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    /// `max_i |w(x_i, .)|`.
    pub fn max_row_norm(&self) -> f64 {
        (0..self.nx()).map(|i| self.values.row(i).norm()).fold(0.0, f64::max)
    }

    /// Analytic `d_x^2 w` via `v'' = a1 v' + (a0 + g lambda) v`.
    pub fn dxx(&self, bundle: &CoefficientBundleX) -> DMatrix<f64> {
        let mut amp = DMatrix::zeros(self.terms.len(), self.nx());
        for (t, (term, ode)) in self.terms.iter().zip(&self.odes).enumerate() {
            let c = term.coefficient * term.band_weight;
            for i in 0..self.nx() {
                let x = self.x[i];
                amp[(t, i)] =
                    c * (bundle.a1.eval(x) * ode.derivative(i) + bundle.potential(x, term.lambda) * ode.value(i));
            }
        }
        (&self.basis * amp).transpose()
    }
}

/// `Lw = -w_xx + a1 w_x + a0 w + g B_y w`, relative to `|w|`.
pub fn residual_check(sol: &SpectralSolution, bundle: &CoefficientBundleX, op: &DiscreteOperator) -> ResidualReport {
    let w = &sol.values;
    let by = w * &op.matrix;
    let nx = sol.nx();
    let ny = sol.y.len();
    let mut lower = DMatrix::zeros(nx, ny);
    let mut y_part: f64 = 0.0;
    for i in 0..nx {
        let x = sol.x[i];
        let (a1, a0, g) = (bundle.a1.eval(x), bundle.a0.eval(x), bundle.g.eval(x));
        for l in 0..ny {
            let gy = g * by[(i, l)];
            y_part = y_part.max(gy.abs());
            lower[(i, l)] = a1 * sol.dx[(i, l)] + a0 * w[(i, l)] + gy;
        }
    }
    let wxx = sol.dxx(bundle);
    let norm = frobenius(w);
    let analytic = frobenius(&(&lower - &wxx)) / norm;
    let h = sol.x[1] - sol.x[0];
    let mut fd = 0.0;
    let mut inner = 0.0;
    for i in 1..nx - 1 {
        for l in 0..ny {
            let d2 = (w[(i + 1, l)] - 2.0 * w[(i, l)] + w[(i - 1, l)]) / (h * h);
            fd += (lower[(i, l)] - d2).powi(2);
            inner += w[(i, l)].powi(2);
        }
    }
    ResidualReport { analytic, finite_difference: (fd / inner).sqrt(), y_part, x_spacing: h }
}

fn weight_from_coefficients(c: &[f64], lambdas: &[f64], epsilon: f64) -> ExponentialWeight {
    // log-sum-exp of 2 eps sqrt(lambda) + ln c^2
    let logs: Vec<f64> =
        c.iter().zip(lambdas).filter(|(c, _)| **c != 0.0).map(|(c, l)| 2.0 * epsilon * l.sqrt() + 2.0 * c.abs().ln()).collect();
    if logs.is_empty() {
        return ExponentialWeight { value: 0.0, log_value: f64::NEG_INFINITY, overflow: false };
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_value = 0.5 * (top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln());
    let value = log_value.exp();
    ExponentialWeight { value, log_value, overflow: value.is_infinite() }
}

/// `|e^{eps sqrt(B)} u|`.
pub fn exponential_weight(u: &[f64], epsilon: f64, dec: &SpectralDecomposition) -> Result<ExponentialWeight> {
    if !(epsilon >= 0.0) {
        return Err(Error::OutOfRange(format!("epsilon must be >= 0, got {epsilon}")));
    }
    Ok(weight_from_coefficients(&dec.coefficients(u), &dec.eigenvalues, epsilon))
}

#[derive(Clone, Debug, Serialize)]
pub struct SolutionMeta {
    pub bands: Vec<usize>,
    pub epsilon: f64,
    pub radius: f64,
    #[serde(rename = "C_x0")]
    pub c_x0: f64,
    pub terms: usize,
    pub exponential_weight: ExponentialWeight,
    pub residuals: ResidualReport,
}

impl SpectralSolution {
    pub fn meta(&self, residuals: ResidualReport) -> SolutionMeta {
        SolutionMeta {
            bands: self.bands.clone(),
            epsilon: self.epsilon,
            radius: self.radius,
            c_x0: self.c_x0,
            terms: self.terms.len(),
            exponential_weight: self.exponential_weight,
            residuals,
        }
    }
}
