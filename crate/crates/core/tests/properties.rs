use ebc_core::chain::{functional_external_length, functional_j, functional_total_length, sample_block_path, PathOptions};
use ebc_core::funcspec::parse_fspec;
use ebc_core::replicate::replicate_rng;
use ebc_core::stable::cf_stable;
use ebc_core::verify::{ecf, ks_statistic, SampleMeta, SampleSet};
use ebc_core::{Alpha, FunctionalSpec, RatesContext, StableParams};
use proptest::prelude::*;

fn alphas() -> impl Strategy<Value = f64> {
    1.05f64..1.95
}

fn meta() -> SampleMeta {
    SampleMeta { label: "prop".into(), n: None, alpha: None, functional: None, seed: None }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn merger_size_pmf_sums_to_one(a in alphas(), j in 2usize..400) {
        let ctx = RatesContext::new(Alpha::new(a).unwrap());
        let pmf = ctx.merger_size_pmf(j).unwrap();
        let total: f64 = pmf.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        prop_assert!(pmf.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn total_rate_matches_sum(a in alphas(), b in 2usize..150) {
        let ctx = RatesContext::new(Alpha::new(a).unwrap());
        let closed = ctx.total_rate(b).unwrap();
        let summed = ctx.total_rate_by_sum(b).unwrap();
        prop_assert!((closed - summed).abs() <= 1e-10 * summed);
    }

    #[test]
    fn sampled_paths_are_valid(a in alphas(), n in 2usize..300, seed in any::<u64>()) {
        let ctx = RatesContext::new(Alpha::new(a).unwrap());
        let path = sample_block_path(&ctx, n, &mut replicate_rng(seed, 0), PathOptions::FULL).unwrap();
        path.validate().unwrap();
        let ext = functional_external_length(&path).unwrap();
        let total = functional_total_length(&path).unwrap();
        prop_assert!(ext <= total + 1e-12);
        prop_assert!(ext > 0.0);
    }

    #[test]
    fn j_is_linear_in_f(seed in any::<u64>(), c1 in -3.0f64..3.0, c2 in -3.0f64..3.0) {
        let a = Alpha::new(1.5).unwrap();
        let ctx = RatesContext::new(a);
        let path = sample_block_path(&ctx, 200, &mut replicate_rng(seed, 0), PathOptions::BARE).unwrap();
        let f = parse_fspec("x^-0.25", a).unwrap();
        let g = parse_fspec("1", a).unwrap();
        let h = f.scaled(c1).plus(&g.scaled(c2)).unwrap();
        let lhs = functional_j(&path, &h);
        let rhs = c1 * functional_j(&path, &f) + c2 * functional_j(&path, &g);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn sigma_is_homogeneous(a in 1.05f64..1.6, c in 0.1f64..10.0) {
        let alpha = Alpha::new(a).unwrap();
        let f: FunctionalSpec = FunctionalSpec::from_terms(alpha, &[(1.0, 0.2), (-0.5, 0.0)]).unwrap();
        let (s1, b1) = f.sigma_beta().unwrap();
        let (s2, b2) = f.scaled(c).sigma_beta().unwrap();
        prop_assert!((s2 - c * s1).abs() <= 1e-8 * s2);
        prop_assert!((b1 - b2).abs() < 1e-10);
        let (s3, b3) = f.scaled(-c).sigma_beta().unwrap();
        prop_assert!((s3 - s2).abs() <= 1e-8 * s2);
        prop_assert!((b3 + b1).abs() < 1e-10);
    }

    #[test]
    fn stable_cf_is_hermitian(a in alphas(), s in 0.1f64..3.0, b in -1.0f64..1.0, t in -5.0f64..5.0) {
        let p = StableParams::new(Alpha::new(a).unwrap(), s, b).unwrap();
        let z = cf_stable(&p, t);
        let w = cf_stable(&p, -t);
        prop_assert!((z - w.conj()).norm() < 1e-12);
        prop_assert!(z.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn ks_statistic_is_bounded_and_symmetric(
        a in prop::collection::vec(-10.0f64..10.0, 1..80),
        b in prop::collection::vec(-10.0f64..10.0, 1..80),
    ) {
        let d = ks_statistic(&a, &b);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((d - ks_statistic(&b, &a)).abs() < 1e-12);
        prop_assert!(ks_statistic(&a, &a) == 0.0);
    }

    #[test]
    fn ecf_ignores_sample_order(mut v in prop::collection::vec(-5.0f64..5.0, 2..60), t in -3.0f64..3.0) {
        let grid = vec![vec![t]];
        let e1 = ecf(&SampleSet::univariate(v.clone(), meta()).unwrap(), &grid).unwrap();
        v.reverse();
        let e2 = ecf(&SampleSet::univariate(v, meta()).unwrap(), &grid).unwrap();
        prop_assert!((e1[0] - e2[0]).norm() < 1e-12);
    }

    #[test]
    fn parsed_specs_evaluate_like_their_terms(c in -4.0f64..4.0, z in 0.0f64..0.3, x in 0.01f64..1.0) {
        let a = Alpha::new(1.5).unwrap();
        let f = parse_fspec(&format!("{c}*x^(-{z})"), a).unwrap();
        prop_assert!((f.eval(x) - c * x.powf(-z)).abs() <= 1e-12 * (1.0 + c.abs() * x.powf(-z)));
    }
}
