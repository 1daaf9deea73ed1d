use kendall::fdd::{fdd_cdf_dp, fdd_cdf_enum, FddQuery};
use kendall::kernel::{kernel_cdf, KernelQuery};
use kendall::simulator::step;
use kendall::williamson::{cdf_n, psi_ratio};
use kendall::{Family, StepDistribution};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        Just(Family::Dirac1),
        (0.05f64..=1.0).prop_map(|p| Family::ParetoMix { p }),
        Just(Family::LackOfMemory),
        (0.1f64..5.0).prop_map(|m| Family::StableLimit { m }),
        Just(Family::Uniform01),
        (0.5f64..4.0, 0.5f64..3.0).prop_map(|(shape, rate)| Family::Gamma { shape, rate }),
    ]
}

fn law() -> impl Strategy<Value = StepDistribution> {
    (family(), 0.3f64..3.0).prop_map(|(f, a)| StepDistribution::with_alpha(f, a).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn step_never_falls_below_inputs(x in 0.0f64..100.0, y in 0.0f64..100.0, xi in 0.0f64..1.0, u in 1e-9f64..1.0, a in 0.1f64..4.0) {
        let theta = u.powf(-0.5 / a);
        let next = step(x, y, xi, theta, a);
        prop_assert!(next >= x.max(y));
    }

    #[test]
    fn psi_stays_in_unit_interval(a in 0.1f64..4.0, r in 0.0f64..2.0) {
        let v = psi_ratio(a, r);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn walk_law_is_monotone_in_t_and_n(d in law(), n in 1u64..20, t in 0.01f64..50.0, dt in 0.0f64..10.0) {
        let here = cdf_n(&d, n, t).unwrap();
        prop_assert!((0.0..=1.0).contains(&here));
        prop_assert!(cdf_n(&d, n, t + dt).unwrap() >= here - 1e-12);
        // the walk is nondecreasing, so later epochs sit lower
        prop_assert!(cdf_n(&d, n + 1, t).unwrap() <= here + 1e-12);
    }

    #[test]
    fn transform_sits_below_cdf(d in law(), t in 0.01f64..50.0) {
        let g = d.williamson(t).unwrap();
        prop_assert!(g >= -1e-12 && g <= d.cdf(t) + 1e-12);
    }

    #[test]
    fn kernel_from_origin_is_the_marginal(d in law(), n in 1u64..10, t in 0.01f64..50.0) {
        let k = kernel_cdf(&d, &KernelQuery::new(0.0, n, t).unwrap()).unwrap();
        prop_assert!((k - cdf_n(&d, n, t).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn kernel_decreases_with_start(d in law(), n in 1u64..6, t in 0.5f64..20.0, x in 0.0f64..1.0) {
        let near = kernel_cdf(&d, &KernelQuery::new(x * t, n, t).unwrap()).unwrap();
        let far = kernel_cdf(&d, &KernelQuery::new((x * t + 0.1 * t).min(t), n, t).unwrap()).unwrap();
        prop_assert!(far <= near + 1e-12);
    }

    #[test]
    fn enumeration_and_dp_agree(
        d in law(),
        raw in prop::collection::vec((1u64..15, 0.05f64..0.95), 1..9),
        scale in 0.5f64..3.0,
    ) {
        let mut epochs: Vec<u64> = raw.iter().map(|r| r.0).collect();
        let mut xs: Vec<f64> = raw.iter().map(|r| scale * d.quantile(r.1).max(1e-3)).collect();
        epochs.sort_unstable();
        xs.sort_by(f64::total_cmp);
        let q = FddQuery::new(epochs, xs).unwrap();
        let (e, p) = (fdd_cdf_enum(&d, &q).unwrap().value, fdd_cdf_dp(&d, &q).unwrap().value);
        prop_assert!((e - p).abs() < 1e-12, "{} vs {}", e, p);
        prop_assert!((0.0..=1.0).contains(&e));
    }

    #[test]
    fn raising_a_threshold_never_lowers_the_fdd(d in law(), u in 0.05f64..0.9, bump in 1.0f64..5.0) {
        let x = d.quantile(u).max(1e-3);
        let lo = fdd_cdf_dp(&d, &FddQuery::new(vec![1, 3], vec![x, 2.0 * x]).unwrap()).unwrap().value;
        let hi = fdd_cdf_dp(&d, &FddQuery::new(vec![1, 3], vec![x, 2.0 * x * bump]).unwrap()).unwrap().value;
        prop_assert!(hi >= lo - 1e-12);
    }
}
