mod common;

use attrvar::catalog;
use attrvar::estimators::{
    estimate_from_moments, optimum_b_phi, r_coefficients, theta_coefficient, CoefficientMode, EstimatorSpec, KcVariant,
    Tuned,
};
use attrvar::fixtures::village_params;
use attrvar::mse_theory::{
    min_mse_m, min_mse_rs, min_var_t2, mse_m, mse_rs, mse_s_family, mse_t1, theoretical_mse, var_t2,
};
use attrvar::population::{ParameterSet, SampleMoments};
use common::{random_params, rel_diff};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn params() -> impl Strategy<Value = ParameterSet> {
    any::<u64>().prop_map(|seed| random_params(&mut ChaCha8Rng::seed_from_u64(seed)))
}

const OPT: CoefficientMode = CoefficientMode::TheoreticalOptimum;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn known_attribute_variance_collapses_to_s_y2(p in params(), s_y2 in 1e-3f64..1e3, n1 in 0.1f64..100.0,
                                                  n2 in 0.0f64..100.0, alpha in -3.0f64..3.0, eta in 0.1f64..10.0,
                                                  v in -1.0f64..1.0) {
        prop_assume!((eta * p.s_phi2 - v).abs() > 1e-9);
        let moments = SampleMoments::from_variances(p.sample_size, s_y2, p.s_phi2);
        let mut specs = vec![
            EstimatorSpec::RatioT1,
            EstimatorSpec::RegressionT2 { b_mode: OPT },
            EstimatorSpec::ExpT3,
            EstimatorSpec::SFamily { n1, n2, b_mode: OPT },
            EstimatorSpec::RsFamily { alpha: Tuned::Fixed(alpha), eta, v },
            EstimatorSpec::MFamily { m: Tuned::Fixed((1.0, 0.0)), gamma: 1, delta: 1.0, mu: v.abs() },
            EstimatorSpec::MFamily { m: Tuned::Fixed((1.0, 0.0)), gamma: -1, delta: 1.0, mu: v.abs() },
        ];
        specs.extend(KcVariant::ALL.map(|variant| EstimatorSpec::Kc { variant }));
        for i in 1..=10 {
            specs.push(catalog::s_member(i, &p, OPT).unwrap());
        }
        for i in 0..=6 {
            specs.push(catalog::rs_member(i, &p).unwrap());
        }
        for spec in specs {
            prop_assert_eq!(estimate_from_moments(&spec, &moments, &p).unwrap(), s_y2, "{:?}", spec);
        }
    }

    #[test]
    fn unit_rs_member_is_the_ratio_estimator(p in params(), s_y2 in 1e-3f64..1e3, s in 1e-3f64..1.0) {
        let moments = SampleMoments::from_variances(p.sample_size, s_y2, s);
        let rs = EstimatorSpec::RsFamily { alpha: Tuned::Fixed(1.0), eta: 1.0, v: 0.0 };
        prop_assert_eq!(
            estimate_from_moments(&rs, &moments, &p).unwrap().to_bits(),
            estimate_from_moments(&EstimatorSpec::RatioT1, &moments, &p).unwrap().to_bits()
        );
    }

    #[test]
    fn optimum_slope_scales_with_y_squared(p in params(), a in prop_oneof![-100.0f64..-0.01, 0.01f64..100.0]) {
        let scaled = ParameterSet { s_y2: a * a * p.s_y2, ..p };
        prop_assert!(rel_diff(optimum_b_phi(&scaled).unwrap(), a * a * optimum_b_phi(&p).unwrap()) <= 1e-12);
    }

    #[test]
    fn regression_bound_equals_optimal_rs(p in params(), eta in 0.1f64..10.0, v in -0.5f64..0.5) {
        prop_assume!((eta * p.s_phi2 - v).abs() > 1e-3);
        prop_assert!(rel_diff(min_var_t2(&p).unwrap(), min_mse_rs(&p, eta, v).unwrap()) <= 1e-12);
    }

    #[test]
    fn reductions_to_the_ratio_estimator(p in params(), n1 in 0.1f64..100.0) {
        let t1 = mse_t1(&p);
        prop_assert!(rel_diff(mse_rs(&p, 1.0, 1.0, 0.0).unwrap(), t1) <= 1e-12);
        prop_assert!(rel_diff(mse_s_family(&p, n1, 0.0, 0.0).unwrap(), t1) <= 1e-12);
    }

    #[test]
    fn regression_optimum_is_a_minimum(p in params(), eps in prop_oneof![-10.0f64..-1e-6, 1e-6f64..10.0]) {
        let b = optimum_b_phi(&p).unwrap();
        let best = min_var_t2(&p).unwrap();
        prop_assert!(rel_diff(var_t2(&p, b), best) <= 1e-10);
        prop_assert!(var_t2(&p, b + eps * b.abs().max(1e-3)) >= best * (1.0 - 1e-12));
    }

    #[test]
    fn rs_optimum_is_a_minimum(p in params(), eps in -5.0f64..5.0, eta in 0.1f64..10.0, v in -0.5f64..0.5) {
        prop_assume!((eta * p.s_phi2 - v).abs() > 1e-3);
        let best = min_mse_rs(&p, eta, v).unwrap();
        let a2 = attrvar::estimators::a2_coefficient(eta, v, p.s_phi2).unwrap();
        let alpha = attrvar::estimators::alpha_opt(&p, a2).unwrap();
        prop_assert!(mse_rs(&p, alpha + eps, eta, v).unwrap() >= best - 1e-12 * best.abs());
    }

    #[test]
    fn m_optimum_is_a_minimum(p in params(), gamma in prop_oneof![Just(1), Just(-1)], delta in 0.1f64..100.0,
                              mu in 0.0f64..10.0, d1 in -2.0f64..2.0, d2 in -50.0f64..50.0) {
        let theta = theta_coefficient(delta, mu, p.s_phi2).unwrap();
        let r = r_coefficients(&p, gamma, theta).unwrap();
        prop_assume!(r.is_positive_definite());
        let (m1, m2) = r.m_opt().unwrap();
        let best = min_mse_m(&p, gamma, theta).unwrap();
        let scale = p.s_y2 * p.s_y2;
        prop_assert!((mse_m(&p, m1, m2, gamma, theta).unwrap() - best).abs() <= 1e-9 * scale);
        prop_assert!(mse_m(&p, m1 + d1, m2 + d2 / p.s_phi2, gamma, theta).unwrap() >= best - 1e-12 * scale);
    }

    #[test]
    fn dominance_chain(p in params(), delta in 0.1f64..100.0, mu in 0.0f64..10.0) {
        let theta = theta_coefficient(delta, mu, p.s_phi2).unwrap();
        let rs = min_mse_rs(&p, 1.0, 0.0).unwrap();
        let t1 = mse_t1(&p);
        prop_assert!(rs <= t1 * (1.0 + 1e-12));
        if let Ok(m) = min_mse_m(&p, 1, theta) {
            prop_assert!(m <= rs + 1e-12 * rs.abs());
        }
    }

    #[test]
    fn mses_are_nonnegative_outside_the_m_family(p in params()) {
        let mut names = catalog::efficiency_table_names();
        names.retain(|n| n != "unbiased");
        for name in names {
            let spec = catalog::parse_estimator(&name, &p, OPT).unwrap();
            let mse = theoretical_mse(&spec, &p).unwrap();
            prop_assert!(mse >= -1e-12 * p.s_y2 * p.s_y2, "{}: {}", name, mse);
        }
        prop_assert!(min_var_t2(&p).unwrap() >= 0.0);
    }
}

#[test]
fn m_family_first_order_minimum_can_be_negative() {
    let p = village_params();
    let theta = theta_coefficient(1.0, 0.0, p.s_phi2).unwrap();
    assert!(r_coefficients(&p, -1, theta).unwrap().is_positive_definite());
    assert!(min_mse_m(&p, -1, theta).unwrap() < 0.0);
}
