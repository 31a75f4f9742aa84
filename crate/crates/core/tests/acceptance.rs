mod common;

use std::time::{Duration, Instant};

use hypospec::estimate_lab::{
    bump, log_norm, mixed_norm_check, sobolev_multiplier_check, superlog_test, support_box, trend_triggered,
    EstimateSetup, FamilySpec, OperatorSpec, Verdict,
};
use hypospec::export::ArtifactDir;
use hypospec::fourier::{embedding_len, log_bracket};
use hypospec::grid_operator::{build_divergence_from_profiles, CoefficientBundleX, DiscreteOperator, Grid1D, Profile};
use hypospec::interpolation::{assemble_theorem_with, high_band_inequality, low_band_inequality, BandSequence, EndpointConvention};
use hypospec::scenario::{run, RunOptions, Scenario};
use hypospec::solution_builder::{build_solution_with, residual_check, BandSelection, BuildOptions};
use hypospec::spectral_calculus::{decompose, norm_sandwich_check, BandProjectionSet, SpectralDecomposition};
use hypospec::spectral_ode::{log_log_slope, solve_ivp, OdeOptions};

type Outcome = Result<String, String>;

fn operator(b: Profile, n: usize) -> DiscreteOperator {
    let grid = Grid1D::dirichlet(n, -1.0, 1.0).unwrap();
    build_divergence_from_profiles(&b, &Profile::constant(1.0), &grid).unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn spectral_calculus_suite() -> Outcome {
    let mut rng = common::rng(1);
    let mut worst_partition: f64 = 0.0;
    let mut worst_orth: f64 = 0.0;
    for b in [Profile::constant(1.0), Profile::kusuoka(0.5)] {
        let op = operator(b, 256);
        let dec = decompose(&op).map_err(|e| e.to_string())?;
        let bands = BandProjectionSet::new(&dec);
        let vs: Vec<Vec<f64>> = (0..100).map(|_| common::random_vec(&mut rng, dec.dim())).collect();
        for (i, u) in vs.iter().enumerate() {
            let nu = common::norm(u);
            let mut sum = vec![0.0; u.len()];
            for p in bands.project_all(u) {
                sum.iter_mut().zip(&p).for_each(|(s, v)| *s += v);
            }
            let diff: Vec<f64> = u.iter().zip(&sum).map(|(a, b)| a - b).collect();
            let rel = common::norm(&diff) / nu;
            worst_partition = worst_partition.max(rel);
            ensure(rel <= 1e-10, || format!("partition residual {rel:e}"))?;
            let mass: f64 = bands.masses(u).iter().sum();
            let n2 = nu * nu;
            ensure(mass <= n2 + 1e-12 * n2 && mass >= 0.5 * n2 - 1e-12 * n2, || {
                format!("square sum {} outside [1/2, 1]", mass / n2)
            })?;
            let v = &vs[(i + 1) % vs.len()];
            let orth = bands.orthogonality_defect(u, v) / (nu * common::norm(v));
            worst_orth = worst_orth.max(orth);
            ensure(orth <= 1e-10, || format!("orthogonality defect {orth:e}"))?;
        }
    }
    Ok(format!("partition residual {worst_partition:.1e}, orthogonality {worst_orth:.1e}"))
}

fn sandwich() -> Outcome {
    let mut rng = common::rng(2);
    let mut checks = 0;
    for b in [Profile::constant(1.0), Profile::power(1.0), Profile::kusuoka(0.5)] {
        let op = operator(b, 256);
        let dec = decompose(&op).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let u = common::random_vec(&mut rng, dec.dim());
            for (name, f) in [("sqrt", f64::sqrt as fn(f64) -> f64), ("identity", |l: f64| l)] {
                let r = norm_sandwich_check(f, &dec, &u).map_err(|e| e.to_string())?;
                ensure(r.lower <= r.middle && r.middle <= r.upper, || {
                    format!("{name}: {} <= {} <= {} fails", r.lower, r.middle, r.upper)
                })?;
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} hard sandwich checks"))
}

fn ode_oracle() -> Outcome {
    let bundle = CoefficientBundleX::with_g(Profile::constant(1.0), 0.0);
    let mut worst: f64 = 0.0;
    for k in [0.0f64, 2.0, 6.0, 10.0, 12.0] {
        let lambda = k.exp();
        let sol = solve_ivp(&bundle, lambda, 0.5, 1e-12).map_err(|e| e.to_string())?;
        for i in 0..sol.x.len() {
            let t = sol.x[i] - sol.x0;
            // compare logarithms of cosh so large lambda cannot overflow
            let arg = lambda.sqrt() * t.abs();
            let log_cosh = arg + (0.5 * (1.0 + (-2.0 * arg).exp())).ln();
            let rel = (sol.v[i].ln() + sol.damping * t.abs() - log_cosh).exp_m1().abs();
            worst = worst.max(rel);
        }
        let c = &sol.certificate;
        ensure(c.certified && c.violations == 0, || format!("certificate at lambda = e^{k}: {} violations", c.violations))?;
        for i in 0..sol.x.len() {
            ensure(sol.log_state_norm(i) <= c.raw_rate * sol.offset(i) + 1e-10, || {
                format!("|(v, dv)| exceeds e^(M t) at x = {}", sol.x[i])
            })?;
        }
    }
    ensure(worst <= 1e-8, || format!("worst relative error {worst:e}"))?;
    Ok(format!("worst relative error {worst:.1e}, zero certificate violations"))
}

fn lambda_scaling() -> Outcome {
    let lambdas: Vec<f64> = (2..=10).map(|k| (k as f64).exp()).collect();
    let bundles = [
        ("constant", Profile::constant(1.0)),
        ("power(1)", Profile::power(1.0)),
        ("1 + x^2", Profile::Polynomial { coeffs: vec![1.0, 0.0, 1.0] }),
    ];
    let mut slopes = Vec::new();
    for (name, g) in bundles {
        let bundle = CoefficientBundleX::with_g(g, 0.3);
        let mut rates = Vec::new();
        for &l in &lambdas {
            let sol = solve_ivp(&bundle, l, 0.5, 1e-10).map_err(|e| e.to_string())?;
            rates.push(sol.certificate.rate);
        }
        let slope = log_log_slope(&lambdas, &rates);
        ensure((0.45..=0.55).contains(&slope), || format!("{name}: slope {slope}"))?;
        slopes.push(format!("{name} {slope:.4}"));
    }
    Ok(format!("slopes {}", slopes.join(", ")))
}

fn null_solution() -> Outcome {
    let grid_ops = [Profile::constant(1.0), Profile::kusuoka(0.5)];
    let gs = [Profile::constant(1.0), Profile::power(1.0)];
    let mut builds = 0;
    let mut worst_analytic: f64 = 0.0;
    let mut orders = Vec::new();
    let mut rng = common::rng(5);
    for b in grid_ops {
        let op = operator(b, 64);
        let dec = decompose(&op).map_err(|e| e.to_string())?;
        let u = common::random_vec(&mut rng, dec.dim());
        for g in &gs {
            let bundle = CoefficientBundleX::with_g(g.clone(), 0.3).with_radius(0.5);
            for j in 1..=5 {
                let mut fd = Vec::new();
                for samples in [101, 201, 401] {
                    let opts = BuildOptions { ode: OdeOptions { samples, ..OdeOptions::with_tol(1e-12) }, radius: None };
                    let sol = build_solution_with(&u, &BandSelection::single(j), &dec, &bundle, 0.5, &opts)
                        .map_err(|e| e.to_string())?;
                    let r = residual_check(&sol, &bundle, &op);
                    worst_analytic = worst_analytic.max(r.analytic);
                    fd.push(r.finite_difference);
                }
                for w in fd.windows(2) {
                    let order = (w[0] / w[1]).log2();
                    ensure((order - 2.0).abs() <= 0.3, || format!("band {j}: observed order {order}"))?;
                    orders.push(order);
                }
                builds += 1;
            }
        }
    }
    ensure(worst_analytic <= 1e-10, || format!("analytic residual {worst_analytic:e}"))?;
    let (lo, hi) = orders.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &o| (a.min(o), b.max(o)));
    Ok(format!("{builds} builds, analytic residual {worst_analytic:.1e}, FD order in [{lo:.3}, {hi:.3}]"))
}

fn band_sequences() -> Outcome {
    let grid = Grid1D::dirichlet(256, -1.0, 1.0).unwrap();
    let mut rng = common::rng(6);
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for (eps, s2) in [(0.5, 1.0), (0.05, 1.0), (0.1, 2.0)] {
        for i in 0..100 {
            let seq = BandSequence::random(&grid, 2 + i % 7, s2, &mut rng).map_err(|e| e.to_string())?;
            let low = low_band_inequality(&seq, eps).map_err(|e| e.to_string())?;
            ensure(low.holds, || format!("low-band violation at eps = {eps}, s2 = {s2}: ratio {}", low.ratio))?;
            worst = worst.max(low.ratio);
            for c in [EndpointConvention::Shared, EndpointConvention::Partition] {
                let high = high_band_inequality(&seq, eps, c).map_err(|e| e.to_string())?;
                ensure(high.holds, || format!("high-band violation ({c:?}) at eps = {eps}: ratio {}", high.ratio))?;
                worst = worst.max(high.ratio);
            }
            checks += 3;
        }
    }
    Ok(format!("{checks} checks, zero violations, worst ratio {worst:.3}"))
}

fn sobolev() -> Outcome {
    let grid: Vec<f64> = (0..1000).map(|i| if i == 0 { 0.0 } else { (i as f64 * 0.03).exp() - 1.0 }).collect();
    for (s1, s2) in [(0.0, 0.0), (0.5, 0.5), (0.75, 1.0), (1.0, 0.25), (2.0, 3.0), (0.6, 0.0)] {
        let sup = sobolev_multiplier_check(s1, s2, &grid, &grid).map_err(|e| e.to_string())?;
        ensure(sup <= 1.0, || format!("multiplier sup {sup} at ({s1}, {s2})"))?;
    }
    let mut rng = common::rng(7);
    let tau = std::f64::consts::TAU;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let u = common::random_field(&mut rng, 32, 32, 5);
        let r = mixed_norm_check(&u, tau, tau, 0.75, 1.0).map_err(|e| e.to_string())?;
        ensure(r.holds, || format!("mixed-norm ratio {}", r.ratio))?;
        worst = worst.max(r.ratio);
    }
    Ok(format!("multiplier sup <= 1 for 6 pairs, mixed-norm worst ratio {worst:.3}"))
}

fn discrimination() -> Outcome {
    let mut lines = Vec::new();
    for kappa in [0.5, -0.5] {
        let setup = EstimateSetup {
            grid: Grid1D::dirichlet(256, -0.1, 0.5).unwrap(),
            operator: OperatorSpec::Separable { weight: Profile::kusuoka(kappa) },
            family: FamilySpec::concentrating(2..=6),
        };
        let r = superlog_test(&setup, &[0.1]).map_err(|e| e.to_string())?;
        let col: Vec<f64> = r.per_scale.iter().map(|row| row.c_eps[0]).collect();
        if kappa > 0.0 {
            ensure(r.verdict == Verdict::Consistent, || format!("kappa = 0.5 gave {:?}", r.verdict))?;
            ensure(!trend_triggered(&col), || format!("kappa = 0.5 control triggered the trend rule: {col:?}"))?;
        } else {
            ensure(r.verdict == Verdict::ViolationTrend, || format!("kappa = -0.5 gave {:?}", r.verdict))?;
            let grows = col.windows(3).any(|w| w[0] > 0.0 && w[2] >= 10.0 * w[0]);
            ensure(grows, || format!("no tenfold growth across three scales: {col:?}"))?;
        }
        lines.push(format!("kappa {kappa}: {:?} {:?}", r.verdict, col.iter().map(|c| format!("{c:.3}")).collect::<Vec<_>>()));
    }
    Ok(lines.join("; "))
}

/// `|log<xi> u_hat|^2` by a direct O(N^2) transform of the zero-padded samples.
fn direct_log_norm2(u: &[f64], grid: &Grid1D) -> f64 {
    let n = embedding_len(grid);
    let h = grid.spacing();
    let mut padded = vec![0.0; n];
    for (i, v) in u.iter().enumerate() {
        padded[grid.node_of(i)] = *v;
    }
    let mut total = 0.0;
    for k in 0..n {
        let (mut re, mut im) = (0.0, 0.0);
        for (m, v) in padded.iter().enumerate() {
            let a = -std::f64::consts::TAU * (k * m % n) as f64 / n as f64;
            re += v * a.cos();
            im += v * a.sin();
        }
        let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let xi = std::f64::consts::TAU * kk / (n as f64 * h);
        total += log_bracket(xi * xi).powi(2) * (re * re + im * im);
    }
    total * h / n as f64
}

fn bump_family(grid: &Grid1D, count: usize) -> Vec<Vec<f64>> {
    let (a, b) = support_box(grid);
    (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            let w = (0.05 + 0.25 * t) * (b - a);
            let c = a + w + ((i * 7) % count) as f64 / count as f64 * (b - a - 2.0 * w);
            grid.points().iter().map(|&y| bump((y - c) / w)).collect()
        })
        .collect()
}

fn assembly() -> Outcome {
    let epsilons = [1.0, 0.3, 0.1, 0.03];
    let mut count = 0;
    for b in [Profile::constant(1.0), Profile::kusuoka(0.5)] {
        let op = operator(b, 256);
        let grid = op.grid;
        let dec: SpectralDecomposition = decompose(&op).map_err(|e| e.to_string())?;
        for u in bump_family(&grid, 20) {
            let oracle = direct_log_norm2(&u, &grid);
            ensure((log_norm(&u, &grid).powi(2) - oracle).abs() <= 1e-10 * oracle, || "log_norm disagrees with direct transform".into())?;
            let mut previous = 0.0;
            for &eps in &epsilons {
                let r = assemble_theorem_with(&u, &dec, 1.0, eps).map_err(|e| e.to_string())?;
                ensure((r.logterm - oracle).abs() <= 1e-10 * oracle, || format!("logterm {} vs oracle {oracle}", r.logterm))?;
                let bound = eps * r.form + r.measured_c * r.norm2;
                ensure(r.holds && oracle <= bound * (1.0 + 1e-10), || format!("assembled bound fails at eps = {eps}"))?;
                ensure(r.measured_c >= previous, || format!("measured C decreased at eps = {eps}"))?;
                previous = r.measured_c;
                count += 1;
            }
        }
    }
    Ok(format!("{count} assembled bounds hold, C(eps) nondecreasing as eps decreases"))
}

fn reproducibility() -> Outcome {
    let scenarios = [
        r#"{"name": "repro-full", "grid": {"n": 48, "ymin": -1, "ymax": 1}, "b": "kusuoka(0.5)",
            "bundle_x": {"g": "power(1)", "x0": 0.3, "radius": 0.5}, "task": "full_report",
            "parameters": {"epsilons": [0.3, 0.1], "lambdas": [1, 20, 400], "bands": [2], "sequences": 3, "seed": 21}}"#,
        r#"{"name": "repro-estimate", "grid": {"n": 128, "ymin": -0.1, "ymax": 0.5}, "b": "kusuoka(-0.5)",
            "task": "superlog", "parameters": {"operator": "separable", "seed": 4}}"#,
        r#"{"name": "repro-smoothing", "grid": {"n": 64, "ymin": -1, "ymax": 1}, "b": "power(1)",
            "task": "smoothing", "parameters": {"seed": 9, "s2": 0.5}}"#,
    ];
    let mut files = 0;
    for text in scenarios {
        let loaded = Scenario::parse(text).map_err(|e| e.to_string())?;
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let mut outputs = Vec::new();
        for d in &dirs {
            let mut out = ArtifactDir::create(d.path()).map_err(|e| e.to_string())?;
            run(&loaded, None, RunOptions::default(), &mut out).map_err(|e| e.to_string())?;
            outputs.push(out.written().to_vec());
        }
        ensure(outputs[0] == outputs[1], || "artifact lists differ".into())?;
        for name in &outputs[0] {
            let a = std::fs::read(dirs[0].path().join(name)).unwrap();
            let b = std::fs::read(dirs[1].path().join(name)).unwrap();
            ensure(a == b, || format!("{name} differs between runs"))?;
            if name.ends_with(".json") {
                let s = String::from_utf8_lossy(&a);
                ensure(s.contains(&loaded.hash), || format!("{name} lacks the scenario hash"))?;
            }
            files += 1;
        }
    }
    Ok(format!("{files} artifacts byte-identical across two runs"))
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("spectral calculus suite", Duration::from_secs(30), spectral_calculus_suite),
        ("band norm sandwich", Duration::from_secs(30), sandwich),
        ("ODE cosh oracle and certificate", Duration::from_secs(60), ode_oracle),
        ("lambda scaling of M", Duration::from_secs(60), lambda_scaling),
        ("null solution residuals", Duration::from_secs(120), null_solution),
        ("band-sequence inequalities", Duration::from_secs(60), band_sequences),
        ("Sobolev multiplier and mixed norm", Duration::from_secs(60), sobolev),
        ("estimate lab discrimination", Duration::from_secs(300), discrimination),
        ("theorem assembly", Duration::from_secs(120), assembly),
        ("reproducibility", Duration::from_secs(120), reproducibility),
    ];
    let mut failures = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) if elapsed <= *limit => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; runtime {elapsed:.1?} exceeds {limit:?}")),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!("criterion {:>2} {status} {name} ({elapsed:.2?}): {detail}", i + 1);
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 10 acceptance criteria passed");
}
