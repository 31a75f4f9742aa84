mod common;

use hypospec::estimate_lab::{
    log_norm, sobolev_multiplier, superlog_constants, FamilyKind, FamilySpec, OperatorSpec,
};
use hypospec::grid_operator::{build_divergence_from_profiles, Grid1D, Profile};
use hypospec::interpolation::{high_band_inequality, low_band_inequality, split_index, BandSequence, EndpointConvention};
use hypospec::spectral_calculus::{decompose, norm_sandwich_check, BandProjectionSet, CutoffFamily};
use proptest::prelude::*;

fn profile() -> impl Strategy<Value = Profile> {
    prop_oneof![
        (0.2f64..5.0).prop_map(Profile::constant),
        (0.0f64..2.0).prop_map(Profile::power),
        (-0.5f64..0.9).prop_map(Profile::kusuoka),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cutoffs_partition_unity(lambda in 1.0f64..1e8) {
        let fam = CutoffFamily::for_spectrum(1e8);
        prop_assert!((fam.partition_sum(lambda) - 1.0).abs() <= 1e-14);
        let sq = fam.square_sum(lambda);
        prop_assert!((0.5 - 1e-14..=1.0 + 1e-14).contains(&sq));
        prop_assert!(fam.active(lambda).len() <= 2);
    }

    #[test]
    fn sobolev_multiplier_at_most_one(s1 in 0.0f64..4.0, s2 in 0.0f64..4.0, xi in -1e6f64..1e6, eta in -1e6f64..1e6) {
        prop_assert!(sobolev_multiplier(s1, s2, xi, eta) <= 1.0);
    }

    #[test]
    fn split_index_monotone(xi in 0.0f64..1e8, dxi in 0.0f64..1e6, s2 in 0.1f64..3.0, eps in 1e-3f64..2.0) {
        prop_assert!(split_index(xi, s2, eps) >= 0.0);
        prop_assert!(split_index(xi + dxi, s2, eps) >= split_index(xi, s2, eps));
        prop_assert!(split_index(xi, s2, 0.5 * eps) >= split_index(xi, s2, eps));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn band_calculus_on_random_operators(b in profile(), n in 16usize..80, seed in any::<u64>()) {
        let grid = Grid1D::dirichlet(n, -1.0, 1.0).unwrap();
        let op = build_divergence_from_profiles(&b, &Profile::constant(1.0), &grid).unwrap();
        let dec = decompose(&op).unwrap();
        let bands = BandProjectionSet::new(&dec);
        let mut rng = common::rng(seed);
        let u = common::random_vec(&mut rng, grid.dim());
        let nu = common::norm(&u);
        let parts = bands.project_all(&u);
        let mut sum = vec![0.0; u.len()];
        for p in &parts {
            for (s, v) in sum.iter_mut().zip(p) {
                *s += v;
            }
        }
        let resid: Vec<f64> = u.iter().zip(&sum).map(|(a, b)| a - b).collect();
        prop_assert!(common::norm(&resid) <= 1e-10 * nu);
        let mass: f64 = bands.masses(&u).iter().sum();
        prop_assert!(mass <= nu * nu * (1.0 + 1e-12));
        prop_assert!(mass >= 0.5 * nu * nu * (1.0 - 1e-12));
        // quadratic form dominates the norm
        prop_assert!(op.form(&u) >= nu * nu * (1.0 - 1e-12));
        // log<xi> >= 1
        let h = grid.spacing();
        prop_assert!(log_norm(&u, &grid).powi(2) >= nu * nu * h * (1.0 - 1e-12));
        for a in [0.5, 1.0, 1.5] {
            let r = norm_sandwich_check(|l: f64| l.powf(a), &dec, &u).unwrap();
            prop_assert!(r.holds);
        }
    }

    #[test]
    fn band_sequence_inequalities(len in 1usize..9, s2 in 0.25f64..3.0, eps in 0.01f64..1.0, seed in any::<u64>()) {
        let grid = Grid1D::dirichlet(256, -1.0, 1.0).unwrap();
        let seq = BandSequence::random(&grid, len, s2, &mut common::rng(seed)).unwrap();
        prop_assert!(low_band_inequality(&seq, eps).unwrap().holds);
        for c in [EndpointConvention::Shared, EndpointConvention::Partition] {
            prop_assert!(high_band_inequality(&seq, eps, c).unwrap().holds);
        }
        let (low, high) = seq.split_parts(eps);
        let total = seq.total_log_norm2();
        prop_assert!(total <= 2.0 * (low + high) * (1.0 + 1e-12));
    }

    #[test]
    fn superlog_constant_nonincreasing_in_epsilon(b in profile(), seed in any::<u64>()) {
        let grid = Grid1D::dirichlet(64, -1.0, 1.0).unwrap();
        let family = FamilySpec::new(FamilyKind::GaussianBumps).with_seed(seed).build(&grid, None).unwrap();
        let op = OperatorSpec::Divergence { b, b0: Profile::constant(1.0) }.build(&grid, &[]).unwrap();
        let eps = [2.0, 1.0, 0.5, 0.1, 0.01];
        let c: Vec<f64> = superlog_constants(&op, &family, &eps).unwrap().into_iter().map(|p| p.0).collect();
        for w in c.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
    }
}
