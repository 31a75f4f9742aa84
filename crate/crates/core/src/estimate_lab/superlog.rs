use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    bracket_norm2, log_norm_field, quadratic_form, EstimateKind, EstimateReport, FamilySpec, OperatorSpec, ScaleRow,
    TestFamily,
};
use crate::grid_operator::{Grid1D, SeparableOperator};
use crate::{Error, Result};

/// Values below this are treated as zero by the verdict rules.
const ZERO_FLOOR: f64 = 1e-9;
const STABILITY: f64 = 0.25;
const TREND_GROWTH: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    ViolationTrend,
    Inconclusive,
}

/// Grid, operator and family of an estimate experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateSetup {
    pub grid: Grid1D,
    pub operator: OperatorSpec,
    pub family: FamilySpec,
}

struct Instance {
    op: SeparableOperator,
    family: TestFamily,
}

impl EstimateSetup {
    fn instance(&self, grid: &Grid1D, family: &FamilySpec) -> Result<Instance> {
        let family = family.build(grid, self.operator.weight())?;
        let op = self.operator.build(grid, &family.etas())?;
        Ok(Instance { op, family })
    }
}

/// `b` within 25% of `a`, or both zero.
pub fn stable(a: f64, b: f64) -> bool {
    if a.abs() < ZERO_FLOOR && b.abs() < ZERO_FLOOR {
        return true;
    }
    (b - a).abs() <= STABILITY * a.abs()
}

/// Growth by at least 10x, nondecreasing, across three consecutive scales
/// starting from a positive value.
pub fn trend_triggered(per_scale: &[f64]) -> bool {
    per_scale
        .windows(3)
        .any(|w| w[0] >= ZERO_FLOOR && w[1] >= w[0] && w[2] >= w[1] && w[2] >= TREND_GROWTH * w[0])
}

/// Per-member quantity, then `(max over members clamped at 0, argmax)`.
fn family_max(values: &[f64]) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, &v) in values.iter().enumerate() {
        if v > best.0 {
            best = (v, i);
        }
    }
    (best.0.max(0.0), best.1)
}

struct MemberTerms {
    log2: f64,
    form: f64,
    norm2: f64,
}

fn member_terms(op: &SeparableOperator, family: &TestFamily) -> Vec<MemberTerms> {
    let grid = op.grid;
    family
        .members
        .par_iter()
        .map(|m| MemberTerms {
            log2: log_norm_field(&m.field, &grid).powi(2),
            form: quadratic_form(op, &m.field),
            norm2: m.field.norm2(grid.spacing()),
        })
        .collect()
}

/// `C_eps = max(0, max_u (|log<xi> u_hat|^2 - eps <Au, u>) / |u|^2)` and the
/// maximizing member, for each `eps`.
pub fn superlog_constants(op: &SeparableOperator, family: &TestFamily, epsilons: &[f64]) -> Result<Vec<(f64, usize)>> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let terms = member_terms(op, family);
    Ok(epsilons
        .iter()
        .map(|&eps| {
            let q: Vec<f64> = terms.iter().map(|t| (t.log2 - eps * t.form) / t.norm2).collect();
            family_max(&q)
        })
        .collect())
}

fn per_scale_superlog(op: &SeparableOperator, family: &TestFamily, epsilons: &[f64]) -> Vec<ScaleRow> {
    let terms = member_terms(op, family);
    family
        .scales()
        .into_iter()
        .map(|scale| {
            let idx: Vec<usize> = (0..family.len()).filter(|&i| family.members[i].scale == Some(scale)).collect();
            let c_eps = epsilons
                .iter()
                .map(|&eps| {
                    let q: Vec<f64> = idx.iter().map(|&i| (terms[i].log2 - eps * terms[i].form) / terms[i].norm2).collect();
                    family_max(&q).0
                })
                .collect();
            ScaleRow { scale, c_eps }
        })
        .collect()
}

fn verdict(
    base: &[f64],
    refined: &[f64],
    enlarged: &[f64],
    per_scale: &[ScaleRow],
    columns: usize,
) -> Verdict {
    let trend = (0..columns).any(|k| {
        let col: Vec<f64> = per_scale.iter().map(|r| r.c_eps[k]).collect();
        trend_triggered(&col)
    });
    if trend {
        return Verdict::ViolationTrend;
    }
    let steady = base.iter().zip(refined).all(|(a, b)| stable(*a, *b))
        && base.iter().zip(enlarged).all(|(a, b)| stable(*a, *b));
    if steady {
        Verdict::Consistent
    } else {
        Verdict::Inconclusive
    }
}

pub fn superlog_test(setup: &EstimateSetup, epsilons: &[f64]) -> Result<EstimateReport> {
    if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::OutOfRange("superlogarithmic test needs positive epsilons".into()));
    }
    let family = setup.family.resolved(&setup.grid);
    let base = setup.instance(&setup.grid, &family)?;
    let c = superlog_constants(&base.op, &base.family, epsilons)?;
    let refined_inst = setup.instance(&setup.grid.refined(2), &family)?;
    let refined: Vec<f64> =
        superlog_constants(&refined_inst.op, &refined_inst.family, epsilons)?.iter().map(|c| c.0).collect();
    let enlarged_inst = setup.instance(&setup.grid, &family.enlarged())?;
    let enlarged: Vec<f64> =
        superlog_constants(&enlarged_inst.op, &enlarged_inst.family, epsilons)?.iter().map(|c| c.0).collect();
    let per_scale = per_scale_superlog(&base.op, &base.family, epsilons);
    let c_eps: Vec<f64> = c.iter().map(|c| c.0).collect();
    let verdict = verdict(&c_eps, &refined, &enlarged, &per_scale, epsilons.len());
    Ok(EstimateReport {
        estimate: EstimateKind::Superlog,
        epsilons: epsilons.to_vec(),
        worst_member: c.iter().map(|c| c.1).collect(),
        c_eps,
        refined_c_eps: refined,
        enlarged_c_eps: enlarged,
        per_scale,
        verdict,
        members: base.family.len(),
        family,
        grid: setup.grid,
    })
}

/// `C(delta) = max_u |<D>^delta u|^2 / (<Au, u> + |u|^2)`, with the
/// maximizing member and the per-scale maxima.
pub fn subelliptic_constants(op: &SeparableOperator, family: &TestFamily, delta: f64) -> Result<((f64, usize), Vec<ScaleRow>)> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::OutOfRange(format!("delta must lie in (0, 1], got {delta}")));
    }
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let grid = op.grid;
    let ratios: Vec<f64> = family
        .members
        .par_iter()
        .map(|m| {
            let num = bracket_norm2(&m.field, &grid, delta);
            num / (quadratic_form(op, &m.field) + m.field.norm2(grid.spacing()))
        })
        .collect();
    let rows = family
        .scales()
        .into_iter()
        .map(|scale| {
            let q: Vec<f64> =
                (0..family.len()).filter(|&i| family.members[i].scale == Some(scale)).map(|i| ratios[i]).collect();
            ScaleRow { scale, c_eps: vec![family_max(&q).0] }
        })
        .collect();
    Ok((family_max(&ratios), rows))
}

pub fn subelliptic_test(setup: &EstimateSetup, delta: f64) -> Result<EstimateReport> {
    let family = setup.family.resolved(&setup.grid);
    let base = setup.instance(&setup.grid, &family)?;
    let ((c, worst), per_scale) = subelliptic_constants(&base.op, &base.family, delta)?;
    let r = setup.instance(&setup.grid.refined(2), &family)?;
    let refined = subelliptic_constants(&r.op, &r.family, delta)?.0 .0;
    let e = setup.instance(&setup.grid, &family.enlarged())?;
    let enlarged = subelliptic_constants(&e.op, &e.family, delta)?.0 .0;
    let verdict = verdict(&[c], &[refined], &[enlarged], &per_scale, 1);
    Ok(EstimateReport {
        estimate: EstimateKind::Subelliptic { delta },
        epsilons: vec![delta],
        c_eps: vec![c],
        worst_member: vec![worst],
        refined_c_eps: vec![refined],
        enlarged_c_eps: vec![enlarged],
        per_scale,
        verdict,
        members: base.family.len(),
        family,
        grid: setup.grid,
    })
}
