mod common;

use hypospec::estimate_lab::{
    closed_graph_constant, mixed_norm_check, subelliptic_test, superlog_test, EstimateSetup, FamilyKind, FamilySpec,
    OperatorSpec, Verdict,
};
use hypospec::grid_operator::{build_divergence_from_profiles, CoefficientBundleX, Grid1D, Profile};
use hypospec::solution_builder::{build_solution, BandSelection};
use hypospec::spectral_calculus::decompose;

fn kusuoka_setup(kappa: f64, lo: f64, hi: f64, n: usize, scales: std::ops::RangeInclusive<u32>) -> EstimateSetup {
    EstimateSetup {
        grid: Grid1D::dirichlet(n, lo, hi).unwrap(),
        operator: OperatorSpec::Separable { weight: Profile::kusuoka(kappa) },
        family: FamilySpec::concentrating(scales),
    }
}

#[test]
fn subelliptic_fails_where_superlog_holds() {
    let setup = kusuoka_setup(0.5, -0.01, 0.04, 512, 6..=10);
    let sup = superlog_test(&setup, &[0.1]).unwrap();
    assert_eq!(sup.verdict, Verdict::Consistent);
    let sub = subelliptic_test(&setup, 0.5).unwrap();
    assert_eq!(sub.verdict, Verdict::ViolationTrend, "{:?}", sub.per_scale);
}

#[test]
fn stable_subelliptic_constant_implies_consistent_superlog() {
    let grid = Grid1D::dirichlet(128, -1.0, 1.0).unwrap();
    let mut checked = 0;
    for b in [Profile::constant(1.0), Profile::constant(2.0), Profile::power(1.0)] {
        let setup = EstimateSetup {
            grid,
            operator: OperatorSpec::Divergence { b: b.clone(), b0: Profile::constant(1.0) },
            family: FamilySpec::new(FamilyKind::GaussianBumps).with_seed(5),
        };
        let sub = subelliptic_test(&setup, 0.5).unwrap();
        if sub.verdict == Verdict::Consistent {
            let sup = superlog_test(&setup, &[1.0, 0.1]).unwrap();
            assert_eq!(sup.verdict, Verdict::Consistent, "{b:?}");
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn closed_graph_constant_grows_toward_the_outer_radius() {
    let grid = Grid1D::dirichlet(64, -1.0, 1.0).unwrap();
    let op = build_divergence_from_profiles(&Profile::power(1.0), &Profile::constant(1.0), &grid).unwrap();
    let dec = decompose(&op).unwrap();
    let bundle = CoefficientBundleX::with_g(Profile::constant(1.0), 0.0).with_radius(0.5);
    let u = dec.eigenvector(3);
    let sol = build_solution(&u, &BandSelection::All, &dec, &bundle, 0.5).unwrap();
    let r = sol.radius;
    let radii: Vec<f64> = (1..=4).map(|k| r * k as f64 / 5.0).collect();
    let report = closed_graph_constant(&sol, &radii, (-0.8, 0.8)).unwrap();
    assert!(report.nondecreasing);
    assert!(report.rows.iter().all(|row| row.ratio.is_finite() && row.ratio > 0.0));
    assert!(closed_graph_constant(&sol, &[r], (-0.8, 0.8)).is_err());
}

#[test]
fn mixed_norm_on_random_fields() {
    let mut rng = common::rng(3);
    for _ in 0..5 {
        let u = common::random_field(&mut rng, 32, 32, 4);
        let tau = std::f64::consts::TAU;
        let r = mixed_norm_check(&u, tau, tau, 0.75, 1.0).unwrap();
        assert!(r.holds, "{r:?}");
    }
}
