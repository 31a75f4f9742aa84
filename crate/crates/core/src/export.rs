//! Deterministic CSV and JSON writers.
//!
//! Numbers use the shortest representation that round-trips, so identical
//! inputs always give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::estimate_lab::{EstimateReport, SmoothingReport};
use crate::interpolation::AssemblyReport;
use crate::solution_builder::SpectralSolution;
use crate::spectral_calculus::SpectralDecomposition;
use crate::spectral_ode::SpectralOdeSolution;
use crate::Result;

pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        serde_json::to_string(&v).expect("finite float serializes")
    }
}

/// Tidy CSV with a header row.
pub fn csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|&v| format_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Dense matrix without header.
pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(m.len() * 20);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_f64(m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

pub fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn spectrum_csv(dec: &SpectralDecomposition) -> String {
    csv(&["index", "eigenvalue"], dec.eigenvalues.iter().enumerate().map(|(k, &l)| [k as f64, l]))
}

/// Columns `x, v, dv, bound, log_scale`: the first three values are stored
/// multiplied by `e^{-log_scale}` (zero unless the growth would overflow).
pub fn ode_csv(sol: &SpectralOdeSolution) -> String {
    let rate = sol.certificate.rate;
    let rows = (0..sol.x.len()).map(|i| {
        let t = sol.offset(i);
        let damp = sol.damping * t;
        [sol.x[i], sol.v[i], sol.dv[i], ((rate - sol.damping) * t).exp(), damp]
    });
    csv(&["x", "v", "dv", "bound", "log_scale"], rows)
}

/// `w` with `x` rows and `y` columns.
pub fn solution_csv(sol: &SpectralSolution) -> String {
    matrix_csv(&sol.values)
}

pub fn estimate_csv(report: &EstimateReport) -> String {
    let label = if report.epsilons.len() == 1 && matches!(report.estimate, crate::estimate_lab::EstimateKind::Subelliptic { .. }) {
        "delta"
    } else {
        "epsilon"
    };
    csv(&[label, "C_eps"], report.table().iter().map(|&(e, c)| [e, c]))
}

pub fn smoothing_csv(report: &SmoothingReport) -> String {
    csv(&["j", "ratio", "eigenvalues"], report.bands.iter().map(|b| [b.j as f64, b.ratio, b.eigenvalues as f64]))
}

pub fn assembly_csv(report: &AssemblyReport) -> String {
    csv(
        &["j", "mass", "smoothing", "low_frequency_term", "high_frequency_term"],
        report.bands.iter().map(|b| [b.j as f64, b.mass, b.smoothing, b.low_frequency_term, b.high_frequency_term]),
    )
}

/// Output directory that remembers what it has written.
#[derive(Debug)]
pub struct ArtifactDir {
    root: PathBuf,
    written: Vec<String>,
}

impl ArtifactDir {
    pub fn create(root: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(root.as_ref())?;
        Ok(ArtifactDir { root: root.as_ref().to_path_buf(), written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.root.join(name), contents)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, &json(value)?)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}
