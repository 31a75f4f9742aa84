//! Symmetric discretizations of the `y`-operator `L2` and the coefficient
//! bundle of the `x`-direction.

mod bundle;
mod profile;
mod separable;

pub use bundle::{normalize_a2, CoefficientBundleX};
pub use profile::Profile;
pub use separable::{build_separable_operator, SeparableOperator};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Dirichlet,
    Periodic,
}

/// Uniform grid on `[y_min, y_max]`.
///
/// Dirichlet grids carry both endpoints as nodes (where the function
/// vanishes), so the unknowns are the `n - 2` interior nodes. Periodic grids
/// identify `y_max` with `y_min` and every node is an unknown.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub n: usize,
    #[serde(alias = "ymin")]
    pub y_min: f64,
    #[serde(alias = "ymax")]
    pub y_max: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl Grid1D {
    pub fn new(n: usize, y_min: f64, y_max: f64, boundary: Boundary) -> Result<Self> {
        let grid = Grid1D { n, y_min, y_max, boundary };
        grid.validate()?;
        Ok(grid)
    }

    pub fn dirichlet(n: usize, y_min: f64, y_max: f64) -> Result<Self> {
        Self::new(n, y_min, y_max, Boundary::Dirichlet)
    }

    pub fn periodic(n: usize, y_min: f64, y_max: f64) -> Result<Self> {
        Self::new(n, y_min, y_max, Boundary::Periodic)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::GridTooSmall { n: self.n });
        }
        if !(self.y_max > self.y_min) || !self.y_min.is_finite() || !self.y_max.is_finite() {
            return Err(Error::InvalidInput(format!(
                "grid interval [{}, {}] is empty",
                self.y_min, self.y_max
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        let len = self.y_max - self.y_min;
        match self.boundary {
            Boundary::Dirichlet => len / (self.n - 1) as f64,
            Boundary::Periodic => len / self.n as f64,
        }
    }

    pub fn length(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn node(&self, i: usize) -> f64 {
        self.y_min + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Number of unknowns (matrix dimension).
    pub fn dim(&self) -> usize {
        match self.boundary {
            Boundary::Dirichlet => self.n - 2,
            Boundary::Periodic => self.n,
        }
    }

    /// Node index of unknown `i`.
    pub fn node_of(&self, i: usize) -> usize {
        match self.boundary {
            Boundary::Dirichlet => i + 1,
            Boundary::Periodic => i,
        }
    }

    /// Coordinates of the unknowns.
    pub fn points(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.node(self.node_of(i))).collect()
    }

    /// Same interval with `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Self {
        let n = match self.boundary {
            Boundary::Dirichlet => (self.n - 1) * factor + 1,
            Boundary::Periodic => self.n * factor,
        };
        Grid1D { n, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorForm {
    Divergence1d,
    Separable2d,
}

/// Symmetric matrix realization of `L2` on a grid, after the positivity
/// shift.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub matrix: DMatrix<f64>,
    pub grid: Grid1D,
    /// Constant added to the diagonal so that the smallest eigenvalue is at
    /// least one. Zero when the unshifted operator already satisfies that.
    pub shift: f64,
    pub form: OperatorForm,
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Matrix before the positivity shift.
    pub fn unshifted(&self) -> DMatrix<f64> {
        let mut m = self.matrix.clone();
        for i in 0..m.nrows() {
            m[(i, i)] -= self.shift;
        }
        m
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(u.len(), n, "grid function length does not match operator");
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.matrix[(i, j)] * u[j];
            }
            *o = acc;
        }
        out
    }

    /// Euclidean quadratic form `u^T A u`.
    pub fn form(&self, u: &[f64]) -> f64 {
        self.apply(u).iter().zip(u).map(|(a, b)| a * b).sum()
    }

    pub fn asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        smallest_eigenvalue(&self.matrix)
    }
}

pub(crate) fn smallest_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Shift so that the smallest eigenvalue of `m + shift*I` is one, or zero if
/// it already is at least one.
pub(crate) fn positivity_shift(lambda_min: f64) -> f64 {
    (1.0 - lambda_min).max(0.0)
}

/// Unshifted matrix of `-d(b d) + b0` with centered flux differences.
/// `b` and `b0` are sampled at every grid node.
pub(crate) fn divergence_matrix(b: &[f64], b0: &[f64], grid: &Grid1D) -> Result<DMatrix<f64>> {
    grid.validate()?;
    if b.len() != grid.n || b0.len() != grid.n {
        return Err(Error::InvalidInput(format!(
            "coefficient samples must have one value per node ({}), got b: {}, b0: {}",
            grid.n,
            b.len(),
            b0.len()
        )));
    }
    if let Some((index, &value)) = b.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::NegativeCoefficient { index, value });
    }
    if let Some(index) = b0.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("b0 sample {index} is not finite")));
    }
    let h2 = grid.spacing() * grid.spacing();
    let n = grid.n;
    let dim = grid.dim();
    let mut m = DMatrix::zeros(dim, dim);
    match grid.boundary {
        Boundary::Dirichlet => {
            // flux through the face between node p and p + 1
            let face = |p: usize| 0.5 * (b[p] + b[p + 1]) / h2;
            for i in 0..dim {
                let p = i + 1;
                m[(i, i)] = face(p - 1) + face(p) + b0[p];
                if i + 1 < dim {
                    let off = -face(p);
                    m[(i, i + 1)] = off;
                    m[(i + 1, i)] = off;
                }
            }
        }
        Boundary::Periodic => {
            let face = |p: usize| 0.5 * (b[p] + b[(p + 1) % n]) / h2;
            for p in 0..n {
                m[(p, p)] = face((p + n - 1) % n) + face(p) + b0[p];
                let q = (p + 1) % n;
                let off = -face(p);
                m[(p, q)] += off;
                m[(q, p)] += off;
            }
        }
    }
    Ok(m)
}

/// `-d/dy(b(y) d/dy) + b0(y)` on `grid`, shifted to be `>= 1`.
pub fn build_divergence_operator(b: &[f64], b0: &[f64], grid: &Grid1D) -> Result<DiscreteOperator> {
    let mut matrix = divergence_matrix(b, b0, grid)?;
    let shift = positivity_shift(smallest_eigenvalue(&matrix));
    if shift > 0.0 {
        for i in 0..matrix.nrows() {
            matrix[(i, i)] += shift;
        }
    }
    Ok(DiscreteOperator { matrix, grid: *grid, shift, form: OperatorForm::Divergence1d })
}

/// Samples the profiles at the grid nodes and builds the operator.
pub fn build_divergence_from_profiles(b: &Profile, b0: &Profile, grid: &Grid1D) -> Result<DiscreteOperator> {
    let nodes = grid.nodes();
    build_divergence_operator(&b.sample(&nodes), &b0.sample(&nodes), grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_spacing_and_points() {
        let g = Grid1D::dirichlet(11, 0.0, 1.0).unwrap();
        assert_eq!(g.spacing(), 0.1);
        assert_eq!(g.dim(), 9);
        assert!((g.points()[0] - 0.1).abs() < 1e-15);
        let p = Grid1D::periodic(16, 0.0, 2.0 * PI).unwrap();
        assert_eq!(p.spacing(), 2.0 * PI / 16.0);
        assert_eq!(p.dim(), 16);
        assert!(matches!(Grid1D::dirichlet(7, 0.0, 1.0), Err(Error::GridTooSmall { n: 7 })));
        assert!(Grid1D::dirichlet(9, 1.0, 1.0).is_err());
        assert_eq!(g.refined(2).n, 21);
    }

    #[test]
    fn periodic_constant_is_circulant_with_fourier_symbol() {
        let g = Grid1D::periodic(16, 0.0, 1.0).unwrap();
        let op = build_divergence_operator(&[1.0; 16], &[1.0; 16], &g).unwrap();
        assert_eq!(op.shift, 0.0);
        let h = g.spacing();
        // circulant: every row is a rotation of the first
        for i in 0..16 {
            for j in 0..16 {
                assert_eq!(op.matrix[(i, j)], op.matrix[(0, (j + 16 - i) % 16)]);
            }
        }
        let mut eig: Vec<f64> = op.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        let mut symbol: Vec<f64> = (0..16)
            .map(|k| 1.0 + 2.0 / (h * h) * (1.0 - (2.0 * PI * k as f64 / 16.0).cos()))
            .collect();
        symbol.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip(&symbol) {
            assert!((a - b).abs() < 1e-10 * b, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_flux_gives_scaled_identity() {
        let g = Grid1D::dirichlet(10, -1.0, 1.0).unwrap();
        let op = build_divergence_operator(&[0.0; 10], &[5.0; 10], &g).unwrap();
        assert_eq!(op.matrix, DMatrix::identity(8, 8) * 5.0);
        assert_eq!(op.shift, 0.0);
    }

    #[test]
    fn negative_flux_is_rejected() {
        let g = Grid1D::dirichlet(10, 0.0, 1.0).unwrap();
        let mut b = vec![1.0; 10];
        b[4] = -0.1;
        assert!(matches!(
            build_divergence_operator(&b, &[1.0; 10], &g),
            Err(Error::NegativeCoefficient { index: 4, .. })
        ));
    }

    #[test]
    fn kusuoka_operator_is_symmetric_and_positive() {
        let g = Grid1D::dirichlet(129, -1.0, 1.0).unwrap();
        let op = build_divergence_from_profiles(&Profile::kusuoka(0.5), &Profile::constant(1.0), &g).unwrap();
        assert_eq!(op.asymmetry(), 0.0);
        assert!(op.min_eigenvalue() >= 1.0 - 1e-10);
    }

    #[test]
    fn shift_lifts_small_spectrum_to_one() {
        let g = Grid1D::dirichlet(65, -1.0, 1.0).unwrap();
        let op = build_divergence_from_profiles(&Profile::power(1.0), &Profile::constant(0.0), &g).unwrap();
        assert!(op.shift > 0.0);
        assert!((op.min_eigenvalue() - 1.0).abs() < 1e-10);
        let before = smallest_eigenvalue(&op.unshifted());
        assert!((before + op.shift - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dirichlet_laplacian_converges_at_second_order() {
        // continuum eigenvalues of -u'' + u on (0, L): 1 + (k pi / L)^2
        let errors: Vec<f64> = [33, 65, 129]
            .iter()
            .map(|&n| {
                let g = Grid1D::dirichlet(n, 0.0, 2.0).unwrap();
                let op = build_divergence_from_profiles(&Profile::constant(1.0), &Profile::constant(1.0), &g).unwrap();
                let mut eig: Vec<f64> = op.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
                eig.sort_by(f64::total_cmp);
                let exact = 1.0 + (3.0 * PI / 2.0).powi(2);
                (eig[2] - exact).abs()
            })
            .collect();
        for w in errors.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.1, "observed order {order}");
        }
    }
}
