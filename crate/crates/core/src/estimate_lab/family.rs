use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{Field, Mode};
use crate::grid_operator::{Grid1D, Profile};
use crate::{Error, Result};

/// Largest `ln eta` used for concentration modes (keeps `eta^2` finite).
const LOG_ETA_CAP: f64 = 345.0;
/// Fraction of the domain trimmed on each side to obtain the support box.
const SUPPORT_MARGIN: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    GaussianBumps,
    ModulatedPackets,
    BandLimitedRandom,
    /// Bumps at distance `2^-m` from `y1 = 0`, width `2^-m-1`.
    Concentrating { scales: Vec<u32> },
}

fn default_members() -> usize {
    12
}

fn default_modes() -> usize {
    16
}

fn default_max_mode() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    #[serde(default = "default_members")]
    pub members: usize,
    #[serde(default)]
    pub seed: u64,
    /// `y2` frequencies per concentration scale.
    #[serde(default = "default_modes")]
    pub modes_per_scale: usize,
    /// Highest sine mode of band-limited members.
    #[serde(default = "default_max_mode")]
    pub max_mode: usize,
    /// Carrier frequency range of modulated packets; fixed on first use so
    /// that refined grids see the same functions.
    #[serde(default)]
    pub max_frequency: Option<f64>,
}

impl FamilySpec {
    pub fn new(kind: FamilyKind) -> Self {
        FamilySpec {
            kind,
            members: default_members(),
            seed: 0,
            modes_per_scale: default_modes(),
            max_mode: default_max_mode(),
            max_frequency: None,
        }
    }

    pub fn concentrating(scales: impl IntoIterator<Item = u32>) -> Self {
        Self::new(FamilyKind::Concentrating { scales: scales.into_iter().collect() })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_members(mut self, members: usize) -> Self {
        self.members = members;
        self
    }

    /// Fixes grid-dependent choices from the base grid.
    pub fn resolved(&self, grid: &Grid1D) -> Self {
        let mut spec = self.clone();
        if spec.max_frequency.is_none() {
            spec.max_frequency = Some(PI / (4.0 * grid.spacing()));
        }
        spec
    }

    /// Twice the members (the first half unchanged) and twice the modes.
    pub fn enlarged(&self) -> Self {
        let mut spec = self.clone();
        spec.members *= 2;
        spec.modes_per_scale *= 2;
        spec
    }

    pub fn build(&self, grid: &Grid1D, weight: Option<&Profile>) -> Result<TestFamily> {
        let spec = self.resolved(grid);
        if spec.members == 0 || spec.modes_per_scale == 0 {
            return Err(Error::EmptyFamily);
        }
        let (a, b) = support_box(grid);
        let pts = grid.points();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let len = b - a;
        let mut members = Vec::new();
        match &spec.kind {
            FamilyKind::GaussianBumps | FamilyKind::ModulatedPackets => {
                let xi_max = spec.max_frequency.unwrap_or(1.0).max(1.0);
                for _ in 0..spec.members {
                    let c = a + len * rng.gen_range(0.3..0.7);
                    let sigma = len * (rng.gen_range((0.02f64).ln()..(0.2f64).ln())).exp();
                    let (xi, phase) = match spec.kind {
                        FamilyKind::ModulatedPackets => {
                            (rng.gen_range(0.0..xi_max.ln()).exp(), rng.gen_range(0.0..2.0 * PI))
                        }
                        _ => (0.0, 0.0),
                    };
                    let values = pts
                        .iter()
                        .map(|&y| {
                            let g = (-(y - c).powi(2) / (2.0 * sigma * sigma)).exp();
                            let carrier = if xi > 0.0 { (xi * y + phase).cos() } else { 1.0 };
                            g * carrier * window(y, a, b)
                        })
                        .collect();
                    members.push(Member { field: Field::one_dimensional(values), scale: None });
                }
            }
            FamilyKind::BandLimitedRandom => {
                for _ in 0..spec.members {
                    let coeffs: Vec<f64> = (0..spec.max_mode).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let values = pts
                        .iter()
                        .map(|&y| {
                            if y <= a || y >= b {
                                return 0.0;
                            }
                            let t = (y - a) / len;
                            coeffs.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * PI * t).sin()).sum()
                        })
                        .collect();
                    members.push(Member { field: Field::one_dimensional(values), scale: None });
                }
            }
            FamilyKind::Concentrating { scales } => {
                let weight = weight.ok_or_else(|| {
                    Error::InvalidInput("concentrating families need a separable weight operator".into())
                })?;
                if scales.is_empty() {
                    return Err(Error::EmptyFamily);
                }
                for &m in scales {
                    let d = 0.5f64.powi(m as i32);
                    let w = 0.5 * d;
                    if d - w <= a || d + w >= b {
                        return Err(Error::Support(format!(
                            "scale {m} bump [{}, {}] is not inside the support box [{a}, {b}]",
                            d - w,
                            d + w
                        )));
                    }
                    let values: Vec<f64> = pts.iter().map(|&y| bump((y - d) / w)).collect();
                    let log_top = concentration_log_frequency(weight, d, w);
                    for eta in log_spaced(log_top, spec.modes_per_scale) {
                        members.push(Member { field: Field::single_mode(eta, values.clone()), scale: Some(m) });
                    }
                }
            }
        }
        for (i, m) in members.iter_mut().enumerate() {
            let norm = m.field.norm2(grid.spacing()).sqrt();
            if !(norm > 0.0) {
                return Err(Error::Support(format!("family member {i} vanishes on the grid")));
            }
            m.field.scale(1.0 / norm);
        }
        Ok(TestFamily { spec, members, support: (a, b) })
    }
}

/// `ln` of the largest `eta` whose degenerate cost at the outer edge of the
/// bump does not exceed its `y1` cost: `eta^2 W(d + w) = 1/w^2`.
fn concentration_log_frequency(weight: &Profile, d: f64, w: f64) -> f64 {
    let wv = weight.eval(d + w);
    let log = if wv > 0.0 { -w.ln() - 0.5 * wv.ln() } else { LOG_ETA_CAP };
    log.clamp(0.0, LOG_ETA_CAP)
}

/// `count` frequencies from 1 to `e^{log_top}`, geometrically spaced.
fn log_spaced(log_top: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![log_top.exp()];
    }
    (0..count).map(|i| (log_top * i as f64 / (count - 1) as f64).exp()).collect()
}

/// `exp(1 - 1/(1 - t^2))` on `|t| < 1`.
pub fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

fn window(y: f64, a: f64, b: f64) -> f64 {
    bump((2.0 * y - a - b) / (b - a))
}

/// Closed box inside which every member is supported.
pub fn support_box(grid: &Grid1D) -> (f64, f64) {
    let m = SUPPORT_MARGIN * grid.length();
    (grid.y_min + m, grid.y_max - m)
}

#[derive(Clone, Debug)]
pub struct Member {
    pub field: Field,
    pub scale: Option<u32>,
}

#[derive(Clone, Debug)]
pub struct TestFamily {
    pub spec: FamilySpec,
    pub members: Vec<Member>,
    pub support: (f64, f64),
}

impl TestFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn etas(&self) -> Vec<f64> {
        let mut etas: Vec<f64> = self.members.iter().flat_map(|m| m.field.modes.iter().map(|md| md.eta)).collect();
        etas.sort_by(f64::total_cmp);
        etas.dedup();
        etas
    }

    /// Scales in increasing order (empty unless concentrating).
    pub fn scales(&self) -> Vec<u32> {
        let mut s: Vec<u32> = self.members.iter().filter_map(|m| m.scale).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// A family from explicit one-dimensional grid functions.
    pub fn from_functions(grid: &Grid1D, functions: Vec<Vec<f64>>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::EmptyFamily);
        }
        let members = functions
            .into_iter()
            .map(|v| {
                if v.len() != grid.dim() {
                    return Err(Error::InvalidInput("test function length does not match grid".into()));
                }
                Ok(Member { field: Field { modes: vec![Mode { eta: 0.0, values: v }] }, scale: None })
            })
            .collect::<Result<_>>()?;
        Ok(TestFamily { spec: FamilySpec::new(FamilyKind::GaussianBumps).with_members(0), members, support: support_box(grid) })
    }
}
