//! Per-mode reduction of `-d_{y1}^2 - W(y1) d_{y2}^2`.
//!
//! Fourier transforming in `y2` turns the operator into
//! `A_eta = -d_{y1}^2 + eta^2 W(y1)` for every frequency `eta`; all modes
//! share one positivity shift so that the family is the restriction of a
//! single operator.

use nalgebra::DMatrix;

use super::{divergence_matrix, positivity_shift, smallest_eigenvalue, DiscreteOperator, Grid1D, OperatorForm, Profile};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct SeparableOperator {
    pub grid: Grid1D,
    /// Unshifted `y1` part (for the reduction: `-d^2`).
    pub base: DMatrix<f64>,
    /// Weight multiplying `eta^2`, sampled at the unknowns.
    pub weight: Vec<f64>,
    pub weight_profile: Option<Profile>,
    pub modes: Vec<f64>,
    pub shift: f64,
}

impl SeparableOperator {
    pub fn new(weight: &Profile, modes: &[f64], grid: &Grid1D) -> Result<Self> {
        let base = divergence_matrix(&vec![1.0; grid.n], &vec![0.0; grid.n], grid)?;
        let weight_samples: Vec<f64> = grid.points().iter().map(|&y| weight.eval(y)).collect();
        Self::from_parts(grid, base, weight_samples, Some(weight.clone()), modes)
    }

    fn from_parts(
        grid: &Grid1D,
        base: DMatrix<f64>,
        weight: Vec<f64>,
        weight_profile: Option<Profile>,
        modes: &[f64],
    ) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidInput("mode list is empty".into()));
        }
        if let Some(eta) = modes.iter().find(|e| !e.is_finite()) {
            return Err(Error::InvalidInput(format!("mode frequency {eta} is not finite")));
        }
        if let Some((index, &value)) = weight.iter().enumerate().find(|(_, w)| !(**w >= 0.0)) {
            return Err(Error::NegativeCoefficient { index, value });
        }
        // A_eta = A_0 + eta^2 W with W >= 0, so the lowest mode bounds all others
        let eta_min = modes.iter().fold(f64::INFINITY, |m, e| m.min(e.abs()));
        let mut lowest = base.clone();
        for (i, w) in weight.iter().enumerate() {
            lowest[(i, i)] += eta_min * eta_min * w;
        }
        let shift = positivity_shift(smallest_eigenvalue(&lowest));
        Ok(SeparableOperator { grid: *grid, base, weight, weight_profile, modes: modes.to_vec(), shift })
    }

    /// Wraps a 1-D operator as a single zero-frequency mode.
    pub fn from_operator(op: &DiscreteOperator) -> Self {
        SeparableOperator {
            grid: op.grid,
            base: op.unshifted(),
            weight: vec![0.0; op.dim()],
            weight_profile: None,
            modes: vec![0.0],
            shift: op.shift,
        }
    }

    pub fn dim(&self) -> usize {
        self.base.nrows()
    }

    pub fn is_one_dimensional(&self) -> bool {
        self.weight.iter().all(|&w| w == 0.0)
    }

    pub fn weight_at(&self, y: f64) -> f64 {
        match &self.weight_profile {
            Some(p) => p.eval(y),
            None => 0.0,
        }
    }

    pub fn mode_matrix(&self, eta: f64) -> DMatrix<f64> {
        let mut m = self.base.clone();
        for (i, w) in self.weight.iter().enumerate() {
            m[(i, i)] += eta * eta * w + self.shift;
        }
        m
    }

    pub fn mode_operator(&self, eta: f64) -> DiscreteOperator {
        DiscreteOperator {
            matrix: self.mode_matrix(eta),
            grid: self.grid,
            shift: self.shift,
            form: OperatorForm::Separable2d,
        }
    }

    /// Euclidean quadratic form of `A_eta` (shift included).
    pub fn form(&self, eta: f64, u: &[f64]) -> f64 {
        let n = self.dim();
        assert_eq!(u.len(), n);
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.base[(i, j)] * u[j];
            }
            acc += row * u[i] + (eta * eta * self.weight[i] + self.shift) * u[i] * u[i];
        }
        acc
    }
}

/// One shifted operator `-d_{y1}^2 + eta^2 W(y1)` per requested frequency.
pub fn build_separable_operator(weight: &Profile, modes: &[f64], grid: &Grid1D) -> Result<Vec<DiscreteOperator>> {
    let sep = SeparableOperator::new(weight, modes, grid)?;
    Ok(modes.iter().map(|&eta| sep.mode_operator(eta)).collect())
}
