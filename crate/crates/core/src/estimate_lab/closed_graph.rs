use serde::Serialize;

use crate::grid_operator::Boundary;
use crate::solution_builder::SpectralSolution;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClosedGraphRow {
    pub inner_radius: f64,
    /// `|w|_{H^1(inner box)} / |w|_{L^2(outer box)}`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedGraphReport {
    pub outer_radius: f64,
    pub inner_y: (f64, f64),
    pub rows: Vec<ClosedGraphRow>,
    pub nondecreasing: bool,
}

/// Ratio of the `H^1` norm of `w` on `|x - x0| <= r'` times `inner_y` to its
/// `L^2` norm on the whole sampled box, for each `r'` in `inner_radii`.
pub fn closed_graph_constant(sol: &SpectralSolution, inner_radii: &[f64], inner_y: (f64, f64)) -> Result<ClosedGraphReport> {
    let x0 = sol.x[sol.center_index()];
    let r = sol.radius;
    if let Some(&bad) = inner_radii.iter().find(|&&rr| !(rr > 0.0 && rr < r)) {
        return Err(Error::InvalidInput(format!("inner radius {bad} must lie in (0, {r})")));
    }
    let (y_lo, y_hi) = inner_y;
    let y = &sol.y;
    if !(y_lo < y_hi) || y_lo < y[0] || y_hi > y[y.len() - 1] {
        return Err(Error::InvalidInput(format!("inner y-range [{y_lo}, {y_hi}] is not nested in the grid")));
    }
    let ny = y.len();
    let nx = sol.nx();
    let hx = sol.x[1] - sol.x[0];
    let hy = y[1] - y[0];
    let periodic = sol.grid.boundary == Boundary::Periodic;
    let w = &sol.values;
    let outer: f64 = w.iter().map(|v| v * v).sum::<f64>() * hx * hy;
    let at = |i: usize, l: isize| -> f64 {
        if l >= 0 && (l as usize) < ny {
            w[(i, l as usize)]
        } else if periodic {
            w[(i, l.rem_euclid(ny as isize) as usize)]
        } else {
            0.0
        }
    };
    let mut rows = Vec::with_capacity(inner_radii.len());
    for &rr in inner_radii {
        let mut acc = 0.0;
        for i in 0..nx {
            if (sol.x[i] - x0).abs() > rr + 1e-12 * r {
                continue;
            }
            for l in 0..ny {
                if y[l] < y_lo || y[l] > y_hi {
                    continue;
                }
                let wy = (at(i, l as isize + 1) - at(i, l as isize - 1)) / (2.0 * hy);
                acc += w[(i, l)].powi(2) + sol.dx[(i, l)].powi(2) + wy * wy;
            }
        }
        let ratio = if outer > 0.0 { (acc * hx * hy / outer).sqrt() } else { 0.0 };
        rows.push(ClosedGraphRow { inner_radius: rr, ratio });
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[a].inner_radius.total_cmp(&rows[b].inner_radius));
    let nondecreasing = order.windows(2).all(|p| rows[p[1]].ratio >= rows[p[0]].ratio);
    Ok(ClosedGraphReport { outer_radius: r, inner_y, rows, nondecreasing })
}
