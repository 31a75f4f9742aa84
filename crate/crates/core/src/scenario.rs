//! JSON scenarios and the task pipelines behind the command line.
//!
//! ```json
//! {
//!   "name": "kusuoka-superlog",
//!   "grid": {"n": 256, "ymin": -0.1, "ymax": 0.5, "boundary": "dirichlet"},
//!   "b": "kusuoka(0.5)",
//!   "b0": "constant",
//!   "bundle_x": {"a2": 1, "a1": 0, "a0": 0, "g": "power(1)", "x0": 0.3},
//!   "task": "superlog",
//!   "parameters": {"operator": "separable", "epsilons": [0.1], "seed": 7},
//!   "outputs": {"dir": "out"}
//! }
//! ```

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::estimate_lab::{
    bump, closed_graph_constant, smoothing_sweep, subelliptic_test, superlog_test, support_box, EstimateSetup,
    FamilyKind, FamilySpec, OperatorSpec,
};
use crate::export::{self, ArtifactDir};
use crate::grid_operator::{build_divergence_from_profiles, normalize_a2, CoefficientBundleX, DiscreteOperator, Grid1D, Profile};
use crate::interpolation::{assemble_theorem_with, high_band_inequality, low_band_inequality, BandSequence, EndpointConvention, InequalityReport};
use crate::solution_builder::{build_solution_with, residual_check, BandSelection, BuildOptions};
use crate::spectral_calculus::{decompose, BandProjectionSet, SpectralDecomposition};
use crate::spectral_ode::{log_log_slope, solve_sweep, sweep_summary, OdeOptions};
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
const MODULES: [&str; 7] =
    ["grid_operator", "spectral_calculus", "spectral_ode", "solution_builder", "estimate_lab", "interpolation", "cli"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Spectrum,
    Bands,
    OdeSweep,
    BuildSolution,
    Superlog,
    Subelliptic,
    Smoothing,
    Interpolate,
    Assemble,
    FullReport,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Spectrum => "spectrum",
            Task::Bands => "bands",
            Task::OdeSweep => "ode_sweep",
            Task::BuildSolution => "build_solution",
            Task::Superlog => "superlog",
            Task::Subelliptic => "subelliptic",
            Task::Smoothing => "smoothing",
            Task::Interpolate => "interpolate",
            Task::Assemble => "assemble",
            Task::FullReport => "full_report",
        }
    }

    pub fn is_estimate(self) -> bool {
        matches!(self, Task::Superlog | Task::Subelliptic | Task::Smoothing)
    }
}

fn one() -> Profile {
    Profile::constant(1.0)
}

fn zero() -> Profile {
    Profile::constant(0.0)
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleSpec {
    #[serde(default = "one")]
    pub a2: Profile,
    #[serde(default = "zero")]
    pub a1: Profile,
    #[serde(default = "zero")]
    pub a0: Profile,
    #[serde(default = "one")]
    pub g: Profile,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "unit")]
    pub radius: f64,
}

impl BundleSpec {
    /// Validated bundle with `a2 = 1` (divided through when necessary).
    pub fn build(&self) -> Result<CoefficientBundleX> {
        let bundle = CoefficientBundleX::new(self.a2.clone(), self.a1.clone(), self.a0.clone(), self.g.clone(), self.x0)?
            .with_radius(self.radius);
        bundle.validate()?;
        if bundle.is_normalized() {
            Ok(bundle)
        } else {
            normalize_a2(&bundle)
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorForm {
    /// `-d(b d) + b0`.
    #[default]
    Divergence,
    /// `-d_{y1}^2 - b(y1) d_{y2}^2`.
    Separable,
}

/// The test function `u` on the `y` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunction {
    /// `bump((y - center) / width)`; defaults to the middle of the support box.
    Bump { center: Option<f64>, width: Option<f64> },
    Eigenvector { index: usize },
    /// Values at the unknowns.
    Values { values: Vec<f64> },
}

impl Default for TestFunction {
    fn default() -> Self {
        TestFunction::Bump { center: None, width: None }
    }
}

impl TestFunction {
    pub fn sample(&self, grid: &Grid1D, dec: &SpectralDecomposition) -> Result<Vec<f64>> {
        match self {
            TestFunction::Bump { center, width } => {
                let (a, b) = support_box(grid);
                let c = center.unwrap_or(0.5 * (a + b));
                let w = width.unwrap_or(0.25 * (b - a));
                if !(w > 0.0) {
                    return Err(Error::InvalidInput(format!("bump width must be positive, got {w}")));
                }
                Ok(grid.points().iter().map(|&y| bump((y - c) / w)).collect())
            }
            TestFunction::Eigenvector { index } => {
                if *index >= dec.dim() {
                    return Err(Error::OutOfRange(format!("eigenvector {index} of {}", dec.dim())));
                }
                Ok(dec.eigenvector(*index))
            }
            TestFunction::Values { values } => {
                if values.len() != grid.dim() {
                    return Err(Error::InvalidInput(format!(
                        "u has {} values, the grid has {} unknowns",
                        values.len(),
                        grid.dim()
                    )));
                }
                Ok(values.clone())
            }
        }
    }
}

fn default_epsilons() -> Vec<f64> {
    vec![0.1]
}

fn default_s1() -> f64 {
    0.75
}

fn default_half() -> f64 {
    0.5
}

fn default_sequences() -> usize {
    10
}

fn default_sequence_length() -> usize {
    6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub operator: OperatorForm,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_s1")]
    pub s1: f64,
    #[serde(default = "unit")]
    pub s2: f64,
    #[serde(default = "default_half")]
    pub delta: f64,
    #[serde(default)]
    pub bands: Option<Vec<usize>>,
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    /// ODE half-width; defaults to the bundle's radius.
    #[serde(default)]
    pub radius: Option<f64>,
    /// Inner radii for the closed-graph table.
    #[serde(default)]
    pub radii: Vec<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub u: TestFunction,
    #[serde(default = "default_sequences")]
    pub sequences: usize,
    #[serde(default = "default_sequence_length")]
    pub sequence_length: usize,
}

impl Default for Parameters {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub dir: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub grid: Grid1D,
    #[serde(default = "one")]
    pub b: Profile,
    #[serde(default = "one")]
    pub b0: Profile,
    #[serde(default)]
    pub bundle_x: Option<BundleSpec>,
    pub task: Task,
    #[serde(default)]
    pub parameters: Parameters,
    #[serde(default)]
    pub outputs: Outputs,
}

/// A parsed scenario with the hash of its canonical JSON form.
#[derive(Clone, Debug)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub hash: String,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<LoadedScenario> {
        if text.trim().is_empty() {
            return Err(Error::InvalidInput("scenario file is empty".into()));
        }
        let value: Value = serde_json::from_str(text)?;
        if !value.is_object() {
            return Err(Error::InvalidInput("scenario must be a JSON object".into()));
        }
        let scenario: Scenario = serde_json::from_value(value.clone())?;
        scenario.validate()?;
        let canonical = serde_json::to_string(&value)?;
        let hash = hex::encode(Sha256::digest(canonical.as_bytes()));
        Ok(LoadedScenario { scenario, hash })
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let p = &self.parameters;
        if p.epsilons.is_empty() || p.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidInput("parameters.epsilons must be a nonempty list of positive numbers".into()));
        }
        if !(p.s2 > 0.0) {
            return Err(Error::OutOfRange(format!("s2 must be positive, got {}", p.s2)));
        }
        if !(p.delta > 0.0 && p.delta <= 1.0) {
            return Err(Error::OutOfRange(format!("delta must lie in (0, 1], got {}", p.delta)));
        }
        if let Some(tol) = p.tol {
            check_tol(tol)?;
        }
        if let Some(l) = &p.lambdas {
            if l.is_empty() || l.iter().any(|v| !(*v >= 1.0 && v.is_finite())) {
                return Err(Error::InvalidInput("parameters.lambdas must be a nonempty list of values >= 1".into()));
            }
        }
        if matches!(self.task, Task::OdeSweep | Task::BuildSolution) && self.bundle_x.is_none() {
            return Err(Error::InvalidInput(format!("task {} needs bundle_x", self.task.name())));
        }
        if self.task == Task::Interpolate && (p.sequences == 0 || p.sequence_length == 0) {
            return Err(Error::InvalidInput("interpolate needs at least one nonempty band sequence".into()));
        }
        if let Some(b) = &self.bundle_x {
            b.build()?;
        }
        Ok(())
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(1e-12..=1e-4).contains(&tol) {
        return Err(Error::OutOfRange(format!("tol must lie in [1e-12, 1e-4], got {tol}")));
    }
    Ok(())
}

/// Command-line overrides.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub ode: f64,
    pub eigen_residual: f64,
    pub gram: f64,
    pub inequality_slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub scenario: String,
    pub scenario_hash: String,
    pub task: &'static str,
    pub seed: u64,
    pub versions: BTreeMap<&'static str, &'static str>,
    pub tolerances: Tolerances,
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    provenance: &'a Provenance,
    result: T,
}

/// What a pipeline produced.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub task: &'static str,
    pub artifacts: Vec<String>,
}

struct Context<'a> {
    scenario: &'a Scenario,
    hash: &'a str,
    seed: u64,
    tol: f64,
    out: &'a mut ArtifactDir,
}

impl Context<'_> {
    fn provenance(&self, task: Task) -> Provenance {
        Provenance {
            scenario: self.scenario.name.clone(),
            scenario_hash: self.hash.to_string(),
            task: task.name(),
            seed: self.seed,
            versions: MODULES.iter().map(|&m| (m, VERSION)).collect(),
            tolerances: Tolerances { ode: self.tol, eigen_residual: 1e-8, gram: 1e-10, inequality_slack: 1e-10 },
        }
    }

    fn report<T: Serialize>(&mut self, task: Task, name: &str, result: T) -> Result<()> {
        let prov = self.provenance(task);
        self.out.write_json(name, &Report { provenance: &prov, result })
    }

    fn params(&self) -> &Parameters {
        &self.scenario.parameters
    }

    fn operator(&self) -> Result<DiscreteOperator> {
        build_divergence_from_profiles(&self.scenario.b, &self.scenario.b0, &self.scenario.grid)
    }

    fn bundle(&self) -> Result<CoefficientBundleX> {
        self.scenario
            .bundle_x
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("scenario has no bundle_x".into()))?
            .build()
    }

    fn family(&self, default: FamilyKind) -> FamilySpec {
        self.params().family.clone().unwrap_or_else(|| FamilySpec::new(default)).with_seed(self.seed)
    }

    fn ode_options(&self) -> OdeOptions {
        let mut o = OdeOptions::with_tol(self.tol);
        if let Some(s) = self.params().samples {
            o.samples = s;
        }
        o
    }
}

/// Runs `task` (the scenario's own task when `None`) and writes its artifacts.
pub fn run(loaded: &LoadedScenario, task: Option<Task>, options: RunOptions, out: &mut ArtifactDir) -> Result<RunSummary> {
    let scenario = &loaded.scenario;
    let tol = options.tol.or(scenario.parameters.tol).unwrap_or(OdeOptions::default().tol);
    check_tol(tol)?;
    let task = task.unwrap_or(scenario.task);
    let mut ctx = Context {
        scenario,
        hash: &loaded.hash,
        seed: options.seed.unwrap_or(scenario.parameters.seed),
        tol,
        out,
    };
    let before = ctx.out.written().len();
    dispatch(&mut ctx, task)?;
    Ok(RunSummary { task: task.name(), artifacts: ctx.out.written()[before..].to_vec() })
}

fn dispatch(ctx: &mut Context, task: Task) -> Result<()> {
    match task {
        Task::Spectrum => spectrum(ctx),
        Task::Bands => bands(ctx),
        Task::OdeSweep => ode_sweep(ctx),
        Task::BuildSolution => build(ctx),
        Task::Superlog | Task::Subelliptic => estimate(ctx, task),
        Task::Smoothing => smoothing(ctx),
        Task::Interpolate => interpolate(ctx),
        Task::Assemble => assemble(ctx),
        Task::FullReport => full_report(ctx),
    }
}

#[derive(Serialize)]
struct SpectrumResult {
    dimension: usize,
    lambda_min: f64,
    lambda_max: f64,
    shift: f64,
    worst_residual: f64,
    gram_error: f64,
    j_max: usize,
}

fn spectrum(ctx: &mut Context) -> Result<()> {
    let op = ctx.operator()?;
    let dec = decompose(&op)?;
    let j_max = BandProjectionSet::new(&dec).j_max();
    ctx.out.write("spectrum.csv", &export::spectrum_csv(&dec))?;
    let result = SpectrumResult {
        dimension: dec.dim(),
        lambda_min: dec.eigenvalues[0],
        lambda_max: dec.lambda_max(),
        shift: op.shift,
        worst_residual: dec.worst_residual,
        gram_error: dec.gram_error,
        j_max,
    };
    ctx.report(Task::Spectrum, "spectrum.json", result)
}

fn bands(ctx: &mut Context) -> Result<()> {
    let op = ctx.operator()?;
    let dec = decompose(&op)?;
    let u = ctx.params().u.sample(&ctx.scenario.grid, &dec)?;
    let set = BandProjectionSet::new(&dec);
    let norm2 = u.iter().map(|v| v * v).sum::<f64>();
    let square_sum: f64 = set.masses(&u).iter().sum();
    let result = serde_json::json!({
        "j_max": set.j_max(),
        "partition_error": set.partition_error(),
        "square_sum_ratio": if norm2 > 0.0 { square_sum / norm2 } else { 0.0 },
        "bands": set.diagnostics(&u),
    });
    ctx.report(Task::Bands, "bands.json", result)
}

fn default_lambdas() -> Vec<f64> {
    (0..=5).map(|k| (2.0 * k as f64).exp()).collect()
}

fn ode_sweep(ctx: &mut Context) -> Result<()> {
    let bundle = ctx.bundle()?;
    let lambdas = ctx.params().lambdas.clone().unwrap_or_else(default_lambdas);
    let radius = ctx.params().radius.unwrap_or(bundle.radius);
    let sols = solve_sweep(&bundle, &lambdas, radius, &ctx.ode_options())?;
    for (k, sol) in sols.iter().enumerate() {
        ctx.out.write(&format!("ode_{k}.csv"), &export::ode_csv(sol))?;
    }
    let entries = sweep_summary(&sols);
    let fit: Vec<usize> = (0..lambdas.len()).filter(|&k| lambdas[k] > 1.0).collect();
    let slope = if fit.len() >= 2 {
        Some(log_log_slope(
            &fit.iter().map(|&k| lambdas[k]).collect::<Vec<_>>(),
            &fit.iter().map(|&k| entries[k].rate).collect::<Vec<_>>(),
        ))
    } else {
        None
    };
    let result = serde_json::json!({ "radius": radius, "entries": &entries, "log_log_slope": slope });
    ctx.report(Task::OdeSweep, "ode_sweep.json", result)?;
    if let Some(bad) = sols.iter().find(|s| !s.certificate.certified) {
        return Err(Error::CertificateFailed { lambda: bad.lambda, worst_ratio: bad.certificate.worst_ratio });
    }
    Ok(())
}

fn selection(params: &Parameters) -> BandSelection {
    match &params.bands {
        Some(js) => BandSelection::List(js.clone()),
        None => BandSelection::All,
    }
}

fn build(ctx: &mut Context) -> Result<()> {
    let op = ctx.operator()?;
    let dec = decompose(&op)?;
    let bundle = ctx.bundle()?;
    let u = ctx.params().u.sample(&ctx.scenario.grid, &dec)?;
    let options = BuildOptions { ode: ctx.ode_options(), radius: ctx.params().radius };
    let eps = ctx.params().epsilons[0];
    let sol = build_solution_with(&u, &selection(ctx.params()), &dec, &bundle, eps, &options)?;
    let residuals = residual_check(&sol, &bundle, &op);
    ctx.out.write("w.csv", &export::solution_csv(&sol))?;
    let result = serde_json::json!({ "meta": sol.meta(residuals), "x": &sol.x, "y": &sol.y });
    ctx.report(Task::BuildSolution, "w.json", result)?;
    if !ctx.params().radii.is_empty() {
        let (a, b) = support_box(&ctx.scenario.grid);
        let radii = ctx.params().radii.clone();
        let table = closed_graph_constant(&sol, &radii, (a, b))?;
        ctx.report(Task::BuildSolution, "closed_graph.json", table)?;
    }
    Ok(())
}

fn operator_spec(scenario: &Scenario) -> OperatorSpec {
    match scenario.parameters.operator {
        OperatorForm::Divergence => OperatorSpec::Divergence { b: scenario.b.clone(), b0: scenario.b0.clone() },
        OperatorForm::Separable => OperatorSpec::Separable { weight: scenario.b.clone() },
    }
}

fn estimate(ctx: &mut Context, task: Task) -> Result<()> {
    let default_kind = match ctx.params().operator {
        OperatorForm::Separable => FamilyKind::Concentrating { scales: (2..=6).collect() },
        OperatorForm::Divergence => FamilyKind::GaussianBumps,
    };
    let setup = EstimateSetup {
        grid: ctx.scenario.grid,
        operator: operator_spec(ctx.scenario),
        family: ctx.family(default_kind),
    };
    let report = if task == Task::Subelliptic {
        subelliptic_test(&setup, ctx.params().delta)?
    } else {
        superlog_test(&setup, &ctx.params().epsilons)?
    };
    ctx.out.write("estimate.csv", &export::estimate_csv(&report))?;
    ctx.report(task, "estimate.json", report)
}

fn smoothing(ctx: &mut Context) -> Result<()> {
    let op = ctx.operator()?;
    let dec = decompose(&op)?;
    let family = ctx.family(FamilyKind::BandLimitedRandom).build(&ctx.scenario.grid, None)?;
    let report = smoothing_sweep(&dec, ctx.params().s2, &family)?;
    ctx.out.write("smoothing.csv", &export::smoothing_csv(&report))?;
    let result = serde_json::json!({ "family": &family.spec, "report": report });
    ctx.report(Task::Smoothing, "smoothing.json", result)
}

#[derive(Serialize)]
struct InterpolationRow {
    sequence: usize,
    epsilon: f64,
    low: InequalityReport,
    high_partition: InequalityReport,
    high_shared: InequalityReport,
}

fn interpolate(ctx: &mut Context) -> Result<()> {
    let grid = ctx.scenario.grid;
    let p = ctx.params().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut rows = Vec::new();
    for i in 0..p.sequences {
        let seq = BandSequence::random(&grid, p.sequence_length, p.s2, &mut rng)?;
        for &eps in &p.epsilons {
            rows.push(InterpolationRow {
                sequence: i,
                epsilon: eps,
                low: low_band_inequality(&seq, eps)?,
                high_partition: high_band_inequality(&seq, eps, EndpointConvention::Partition)?,
                high_shared: high_band_inequality(&seq, eps, EndpointConvention::Shared)?,
            });
        }
    }
    let violations = rows.iter().filter(|r| !(r.low.holds && r.high_partition.holds && r.high_shared.holds)).count();
    let table = export::csv(
        &["sequence", "epsilon", "low_lhs", "low_rhs", "high_lhs", "high_rhs"],
        rows.iter().map(|r| [r.sequence as f64, r.epsilon, r.low.lhs, r.low.rhs, r.high_shared.lhs, r.high_shared.rhs]),
    );
    ctx.out.write("interp.csv", &table)?;
    let result = serde_json::json!({ "s2": p.s2, "violations": violations, "rows": rows });
    ctx.report(Task::Interpolate, "interp.json", result)?;
    if violations > 0 {
        return Err(Error::InequalityFailed(format!("{violations} band-sequence checks failed")));
    }
    Ok(())
}

fn assemble(ctx: &mut Context) -> Result<()> {
    let op = ctx.operator()?;
    let dec = decompose(&op)?;
    let u = ctx.params().u.sample(&ctx.scenario.grid, &dec)?;
    let s2 = ctx.params().s2;
    let mut reports = Vec::new();
    for (i, &eps) in ctx.params().epsilons.clone().iter().enumerate() {
        let r = assemble_theorem_with(&u, &dec, s2, eps)?;
        ctx.out.write(&format!("assembly_bands_{i}.csv"), &export::assembly_csv(&r))?;
        reports.push(r);
    }
    let failed = reports.iter().filter(|r| !r.holds).count();
    ctx.report(Task::Assemble, "assembly.json", &reports)?;
    if failed > 0 {
        return Err(Error::InequalityFailed(format!("assembled estimate failed for {failed} epsilon values")));
    }
    Ok(())
}

fn full_report(ctx: &mut Context) -> Result<()> {
    let mut tasks = vec![Task::Spectrum, Task::Bands];
    if ctx.scenario.bundle_x.is_some() {
        tasks.extend([Task::OdeSweep, Task::BuildSolution]);
    }
    tasks.extend([Task::Superlog, Task::Interpolate, Task::Assemble]);
    let mut sections = Vec::new();
    for task in tasks {
        let before = ctx.out.written().len();
        dispatch(ctx, task)?;
        sections.push(RunSummary { task: task.name(), artifacts: ctx.out.written()[before..].to_vec() });
    }
    ctx.report(Task::FullReport, "report.json", sections)
}
