//! Empirical tests of the functional inequalities on finite test families.
//!
//! Functions on the separable 2-D model are stored as a list of `y2`
//! Fourier modes `(eta, f_eta(y1))`; a one-dimensional function is the
//! single mode `eta = 0`. Norms are grid `L^2` norms, `|u|^2 = h sum u^2`.

mod closed_graph;
mod family;
mod smoothing;
mod sobolev;
mod superlog;

pub use closed_graph::{closed_graph_constant, ClosedGraphReport, ClosedGraphRow};
pub use family::{bump, support_box, FamilyKind, FamilySpec, Member, TestFamily};
pub use smoothing::{smoothing_ratio, smoothing_sweep, sobolev_norm, BandSmoothing, SmoothingReport};
pub use sobolev::{mixed_norm_check, sobolev_constant, sobolev_multiplier, sobolev_multiplier_check, MixedNormReport};
pub use superlog::{
    subelliptic_constants, subelliptic_test, superlog_constants, superlog_test, stable, trend_triggered,
    EstimateSetup, Verdict,
};

use serde::{Deserialize, Serialize};

use crate::fourier::{log_bracket, spectrum};
use crate::grid_operator::{
    build_divergence_from_profiles, Grid1D, Profile, SeparableOperator,
};
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub eta: f64,
    /// `f_eta` at the unknowns of the `y1` grid.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub modes: Vec<Mode>,
}

impl Field {
    pub fn one_dimensional(values: Vec<f64>) -> Self {
        Field { modes: vec![Mode { eta: 0.0, values }] }
    }

    pub fn single_mode(eta: f64, values: Vec<f64>) -> Self {
        Field { modes: vec![Mode { eta, values }] }
    }

    pub fn norm2(&self, h: f64) -> f64 {
        self.modes.iter().map(|m| m.values.iter().map(|v| v * v).sum::<f64>()).sum::<f64>() * h
    }

    pub fn scale(&mut self, factor: f64) {
        for m in &mut self.modes {
            for v in &mut m.values {
                *v *= factor;
            }
        }
    }
}

/// `|log<xi> u_hat|` of a one-dimensional grid function.
pub fn log_norm(u: &[f64], grid: &Grid1D) -> f64 {
    let s = spectrum(u, grid);
    s.xi.iter().zip(&s.power).map(|(x, p)| log_bracket(x * x).powi(2) * p).sum::<f64>().sqrt()
}

/// `|log<(xi, eta)> u_hat|` of a field on the separable model.
pub fn log_norm_field(field: &Field, grid: &Grid1D) -> f64 {
    field
        .modes
        .iter()
        .map(|m| {
            let s = spectrum(&m.values, grid);
            let eta2 = m.eta * m.eta;
            s.xi.iter().zip(&s.power).map(|(x, p)| log_bracket(x * x + eta2).powi(2) * p).sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

/// `|<D>^delta u|^2` with `<D>^2 = e^2 + xi^2 + eta^2`.
pub fn bracket_norm2(field: &Field, grid: &Grid1D, delta: f64) -> f64 {
    let e2 = std::f64::consts::E.powi(2);
    field
        .modes
        .iter()
        .map(|m| {
            let s = spectrum(&m.values, grid);
            let eta2 = m.eta * m.eta;
            s.xi.iter().zip(&s.power).map(|(x, p)| (e2 + x * x + eta2).powf(delta) * p).sum::<f64>()
        })
        .sum()
}

/// `<A u, u>` in the grid `L^2` pairing.
pub fn quadratic_form(op: &SeparableOperator, field: &Field) -> f64 {
    field.modes.iter().map(|m| op.form(m.eta, &m.values)).sum::<f64>() * op.grid.spacing()
}

/// How to build the operator for a given grid (refinement rebuilds it).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum OperatorSpec {
    /// `-d(b d) + b0` in one variable.
    Divergence { b: Profile, b0: Profile },
    /// `-d_{y1}^2 - W(y1) d_{y2}^2`, reduced per `y2` mode.
    Separable { weight: Profile },
}

impl OperatorSpec {
    pub fn build(&self, grid: &Grid1D, etas: &[f64]) -> Result<SeparableOperator> {
        match self {
            OperatorSpec::Divergence { b, b0 } => {
                Ok(SeparableOperator::from_operator(&build_divergence_from_profiles(b, b0, grid)?))
            }
            OperatorSpec::Separable { weight } => {
                let modes = if etas.is_empty() { vec![0.0] } else { etas.to_vec() };
                SeparableOperator::new(weight, &modes, grid)
            }
        }
    }

    pub fn weight(&self) -> Option<&Profile> {
        match self {
            OperatorSpec::Separable { weight } => Some(weight),
            OperatorSpec::Divergence { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimateKind {
    Superlog,
    Subelliptic { delta: f64 },
    Smoothing { s2: f64 },
    Sobolev { s1: f64, s2: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleRow {
    pub scale: u32,
    pub c_eps: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub estimate: EstimateKind,
    /// The `eps` values (for the subelliptic test, the single `delta`).
    pub epsilons: Vec<f64>,
    #[serde(rename = "C_eps")]
    pub c_eps: Vec<f64>,
    pub worst_member: Vec<usize>,
    pub refined_c_eps: Vec<f64>,
    pub enlarged_c_eps: Vec<f64>,
    pub per_scale: Vec<ScaleRow>,
    pub verdict: Verdict,
    pub family: FamilySpec,
    pub members: usize,
    pub grid: Grid1D,
}

impl EstimateReport {
    /// `(eps, C_eps)` rows.
    pub fn table(&self) -> Vec<(f64, f64)> {
        self.epsilons.iter().copied().zip(self.c_eps.iter().copied()).collect()
    }
}
