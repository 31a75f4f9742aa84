use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hypospec::export::ArtifactDir;
use hypospec::scenario::{run, RunOptions, Scenario, Task};
use hypospec::Error;

/// Run a JSON scenario through one of the hypospec pipelines.
#[derive(Parser, Debug)]
#[command(name = "hypospec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (default: the scenario's outputs.dir, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides parameters.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the ODE tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues of the discretized operator.
    Spectrum(Common),
    /// Band diagnostics of the scenario's test function.
    Bands(Common),
    /// Spectral ODE sweep over lambda.
    Ode(Common),
    /// Null solution w = v(x, B) u.
    Solve(Common),
    /// Superlog, subelliptic or smoothing estimate (from the scenario task).
    Estimate(Common),
    /// Band-sequence inequalities on random sequences.
    Interp(Common),
    /// Assembled log-estimate for the scenario's test function.
    Assemble(Common),
    /// Every applicable pipeline plus a summary.
    Report(Common),
}

const EXIT_SCHEMA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_CERTIFICATE: u8 = 4;

fn exit_code(err: &Error) -> u8 {
    if err.is_schema() {
        EXIT_SCHEMA
    } else if err.is_certificate() {
        EXIT_CERTIFICATE
    } else {
        EXIT_NUMERICAL
    }
}

fn kind(code: u8) -> &'static str {
    match code {
        EXIT_SCHEMA => "schema",
        EXIT_CERTIFICATE => "certificate",
        _ => "numerical",
    }
}

fn fail(err: &Error, code: u8, out: Option<&ArtifactDir>) -> ExitCode {
    let body = serde_json::json!({ "error": kind(code), "message": err.to_string(), "exit_code": code });
    eprintln!("{body}");
    if let Some(dir) = out {
        let _ = std::fs::write(dir.root().join("error.json"), format!("{body:#}\n"));
    }
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, task) = match &cli.command {
        Command::Spectrum(c) => (c, Some(Task::Spectrum)),
        Command::Bands(c) => (c, Some(Task::Bands)),
        Command::Ode(c) => (c, Some(Task::OdeSweep)),
        Command::Solve(c) => (c, Some(Task::BuildSolution)),
        Command::Estimate(c) => (c, None),
        Command::Interp(c) => (c, Some(Task::Interpolate)),
        Command::Assemble(c) => (c, Some(Task::Assemble)),
        Command::Report(c) => (c, Some(Task::FullReport)),
    };
    let text = match std::fs::read_to_string(&common.scenario) {
        Ok(t) => t,
        Err(e) => return fail(&Error::Io(e), EXIT_SCHEMA, None),
    };
    let loaded = match Scenario::parse(&text) {
        Ok(l) => l,
        Err(e) => return fail(&e, EXIT_SCHEMA, None),
    };
    let task = task.unwrap_or(if loaded.scenario.task.is_estimate() { loaded.scenario.task } else { Task::Superlog });
    let dir = common
        .out
        .clone()
        .or_else(|| loaded.scenario.outputs.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut out = match ArtifactDir::create(&dir) {
        Ok(o) => o,
        Err(e) => return fail(&e, EXIT_NUMERICAL, None),
    };
    let options = RunOptions { seed: common.seed, tol: common.tol };
    match run(&loaded, Some(task), options, &mut out) {
        Ok(summary) => {
            println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = exit_code(&e);
            fail(&e, code, Some(&out))
        }
    }
}
