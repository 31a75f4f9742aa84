//! Functional calculus of a discrete self-adjoint operator: eigensystem,
//! spectral resolution `E_lambda`, `f(B)` and the band projections `P_j`.

mod bands;
mod cutoff;

pub use bands::{BandInfo, BandProjectionSet};
pub use cutoff::{phi, psi, CutoffFamily};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::grid_operator::DiscreteOperator;
use crate::{Error, Result};

const RESIDUAL_TOL: f64 = 1e-8;
const GRAM_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal columns; column `k` belongs to `eigenvalues[k]`.
    pub eigenvectors: DMatrix<f64>,
    pub source: DiscreteOperator,
    pub worst_residual: f64,
    pub gram_error: f64,
}

/// Full eigensystem of `op`, sorted ascending, with each eigenvector's
/// largest component made positive.
pub fn decompose(op: &DiscreteOperator) -> Result<SpectralDecomposition> {
    if op.asymmetry() != 0.0 {
        return Err(Error::InvalidInput(format!("operator matrix is not symmetric ({:e})", op.asymmetry())));
    }
    let n = op.dim();
    let eig = op.matrix.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
        eigenvectors.set_column(dst, &col);
    }

    let residual = &op.matrix * &eigenvectors - &eigenvectors * DMatrix::from_diagonal(&DVector::from_vec(eigenvalues.clone()));
    let mut worst_residual: f64 = 0.0;
    let mut failed = false;
    for k in 0..n {
        let r = residual.column(k).norm();
        let scaled = r / eigenvalues[k].abs().max(1.0);
        worst_residual = worst_residual.max(scaled);
        failed |= !(scaled <= RESIDUAL_TOL);
    }
    let gram = eigenvectors.transpose() * &eigenvectors - DMatrix::identity(n, n);
    let gram_error = gram.abs().max();
    if failed || !(gram_error <= GRAM_TOL) {
        return Err(Error::EigenSolver { worst_residual: worst_residual.max(gram_error) });
    }
    if eigenvalues[0] < 1.0 - POSITIVITY_TOL {
        return Err(Error::InvalidInput(format!(
            "operator spectrum starts at {} < 1; build it with a positivity shift",
            eigenvalues[0]
        )));
    }
    Ok(SpectralDecomposition { eigenvalues, eigenvectors, source: op.clone(), worst_residual, gram_error })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SandwichReport {
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
    pub holds: bool,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k).iter().copied().collect()
    }

    /// `<u, e_k>` for all `k`.
    pub fn coefficients(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.dim(), "grid function length does not match decomposition");
        let u = DVector::from_column_slice(u);
        (self.eigenvectors.transpose() * u).iter().copied().collect()
    }

    /// `sum_k c_k e_k`.
    pub fn synthesize(&self, c: &[f64]) -> Vec<f64> {
        let c = DVector::from_column_slice(c);
        (&self.eigenvectors * c).iter().copied().collect()
    }

    /// `sum_k w_k <u, e_k> e_k`.
    pub fn apply_weights(&self, weights: &[f64], u: &[f64]) -> Vec<f64> {
        let c: Vec<f64> = self.coefficients(u).iter().zip(weights).map(|(c, w)| c * w).collect();
        self.synthesize(&c)
    }

    pub fn function_values(&self, f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        self.eigenvalues
            .iter()
            .map(|&l| {
                let v = f(l);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFinite { lambda: l })
                }
            })
            .collect()
    }

    /// Number of eigenvalues `<= lambda`.
    pub fn count_at_most(&self, lambda: f64) -> usize {
        self.eigenvalues.partition_point(|&l| l <= lambda)
    }

    /// `E_lambda = sum_{lambda_k <= lambda} e_k e_k^T`.
    pub fn resolution(&self, lambda: f64) -> DMatrix<f64> {
        let m = self.count_at_most(lambda);
        let v = self.eigenvectors.columns(0, m);
        v * v.transpose()
    }

    pub fn apply_resolution(&self, lambda: f64, u: &[f64]) -> Vec<f64> {
        let m = self.count_at_most(lambda);
        let w: Vec<f64> = (0..self.dim()).map(|k| if k < m { 1.0 } else { 0.0 }).collect();
        self.apply_weights(&w, u)
    }
}

/// `f(B)u = sum_k f(lambda_k) <u, e_k> e_k`.
pub fn apply_function(f: impl Fn(f64) -> f64, dec: &SpectralDecomposition, u: &[f64]) -> Result<Vec<f64>> {
    let w = dec.function_values(f)?;
    Ok(dec.apply_weights(&w, u))
}

/// Band bracket `sum f(e^{j-1})^2 |P_j u|^2 <= |f(B)u|^2 <= 2 sum f(e^{j+1})^2 |P_j u|^2`
/// for nondecreasing positive `f` on `[1, inf)`.
pub fn norm_sandwich_check(f: impl Fn(f64) -> f64, dec: &SpectralDecomposition, u: &[f64]) -> Result<SandwichReport> {
    let values = dec.function_values(&f)?;
    for (k, w) in values.windows(2).enumerate() {
        if w[1] < w[0] - 1e-12 * w[0].abs() {
            return Err(Error::NonMonotone { at: dec.eigenvalues[k + 1] });
        }
    }
    if let Some(k) = values.iter().position(|&v| v < 0.0) {
        return Err(Error::OutOfRange(format!("f is negative at eigenvalue {}", dec.eigenvalues[k])));
    }
    let c = dec.coefficients(u);
    let middle: f64 = c.iter().zip(&values).map(|(c, f)| (c * f).powi(2)).sum();
    let bands = BandProjectionSet::new(dec);
    let mut lower = 0.0;
    let mut upper = 0.0;
    for j in bands.cutoffs.bands() {
        let mass = bands.mass(j, &c);
        let lo = f((j as f64 - 1.0).exp().max(1.0));
        let hi = f((j as f64 + 1.0).exp());
        lower += lo * lo * mass;
        upper += 2.0 * hi * hi * mass;
    }
    let slack = 1e-10 * middle.abs().max(f64::MIN_POSITIVE);
    let holds = lower <= middle + slack && middle <= upper + slack;
    Ok(SandwichReport { lower, middle, upper, holds })
}

pub fn euclidean_norm(u: &[f64]) -> f64 {
    u.iter().map(|v| v * v).sum::<f64>().sqrt()
}
