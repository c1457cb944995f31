use super::*;
use crate::mc::TestFunction;
use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use proptest::prelude::{prop_assert, proptest, ProptestConfig};

const PAIRS: [(f64, f64); 3] = [(1.8, 1.5), (1.9, 1.2), (1.6, 1.4)];

fn square() -> TestFunction2D {
    TestFunction2D::Box { v_lo: 0.5, v_hi: 1.5, w_lo: -1.5, w_hi: -0.5 }
}

fn family() -> Vec<TestFunction2D> {
    vec![
        square(),
        TestFunction2D::Box { v_lo: 0.1, v_hi: 2.0, w_lo: -0.7, w_hi: -0.2 },
        TestFunction2D::RadialBump { cv: 1.0, cw: -1.0, radius: 0.6 },
        TestFunction2D::RadialBump { cv: 0.4, cw: -2.0, radius: 0.3 },
        TestFunction2D::Product(
            TestFunction::Bump { center: 1.0, half_width: 0.5 },
            TestFunction::Indicator { lo: -2.0, hi: -0.3 },
        ),
    ]
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() < tol * (1.0 + a.abs())
}

#[test]
fn identities_at_a_point() {
    let pair = StablePair::unit(1.8, 1.5).unwrap();
    let (r1, r2) = landing_identity_residual(&pair, 0.5, 2.0).unwrap();
    assert!(r1.abs() < 1e-15 && r2.abs() < 1e-15, "{r1} {r2}");
}

#[test]
fn identities_on_a_grid() {
    for (a, b) in [(1.8, 1.5), (1.9, 1.2)] {
        let pair = StablePair::unit(a, b).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..10 {
            for j in 0..10 {
                let s = 0.05 + 0.1 * i as f64;
                let t = 0.5 * 8f64.powf(j as f64 / 9.0);
                let (r1, r2) = landing_identity_residual(&pair, s, t).unwrap();
                worst = worst.max(r1.abs()).max(r2.abs());
            }
        }
        assert!(worst < 1e-12, "({a},{b}): {worst}");
    }
}

#[test]
fn identity_residual_rejects_bad_coordinates() {
    let pair = StablePair::unit(1.8, 1.5).unwrap();
    for (s, t) in [(0.0, 1.0), (1.0, 1.0), (0.5, 0.0), (0.5, f64::INFINITY), (f64::NAN, 1.0)] {
        assert!(matches!(landing_identity_residual(&pair, s, t), Err(Error::Domain(_))));
    }
}

#[test]
fn pair_requires_alpha_above_beta() {
    assert!(StablePair::unit(1.5, 1.8).is_err());
    assert!(StablePair::unit(1.5, 1.5).is_err());
    assert!(StablePair::new(1.8, 1.5, 0.0, 1.0).is_err());
    assert!(StablePair::new(1.8, 1.5, 1.0, f64::INFINITY).is_err());
}

#[test]
fn balance_holds_on_the_regression_family() {
    for (a, b) in PAIRS {
        let pair = StablePair::unit(a, b).unwrap();
        for h in family() {
            let r = balance_report(&pair, &h).unwrap();
            assert!(r.lhs.value > 0.0);
            assert!(r.pass, "({a},{b}) {h:?}: {} vs {}", r.lhs.value, r.rhs.value);
        }
    }
}

#[test]
fn balance_holds_with_other_tail_constants() {
    // the landing pair does not see c_X, c_Y; neither do the kernels
    let pair = StablePair::new(1.8, 1.5, 2.0, 0.3).unwrap();
    let r = balance_report(&pair, &square()).unwrap();
    assert!(r.pass);
}

#[test]
fn raw_and_regularized_coordinates_agree() {
    let opts = BalanceOptions::default();
    for (a, b) in PAIRS {
        let pair = StablePair::unit(a, b).unwrap();
        for h in family() {
            let lhs = balance_lhs(&pair, &h).unwrap().value;
            let lhs_raw = balance_lhs_raw(a, &pair.psi(), &h, &opts).unwrap().value;
            assert!(close(lhs, lhs_raw, 1e-8), "({a},{b}) {h:?}: {lhs} vs {lhs_raw}");
            let rhs = balance_rhs(&pair, &h).unwrap().value;
            let rhs_raw = balance_rhs_raw(b, &pair.psi_hat(), &h, &opts).unwrap().value;
            assert!(close(rhs, rhs_raw, 1e-8), "({a},{b}) {h:?}: {rhs} vs {rhs_raw}");
        }
    }
}

#[test]
fn raw_route_needs_a_bounded_support() {
    let pair = StablePair::unit(1.8, 1.5).unwrap();
    let h = TestFunction2D::Box { v_lo: 0.5, v_hi: f64::INFINITY, w_lo: -1.0, w_hi: -0.5 };
    let r = balance_lhs_raw(1.8, &pair.psi(), &h, &BalanceOptions::default());
    assert!(matches!(r, Err(Error::Config(_))));
    assert!(balance_lhs(&pair, &h).unwrap().value > 0.0);
}

#[test]
fn w_only_test_function_reduces_to_one_dimension() {
    let g = TestFunction::Bump { center: -1.0, half_width: 0.6 };
    let h = TestFunction2D::Product(TestFunction::Constant(1.0), g.clone());
    let opts = BalanceOptions::default();
    for (a, b) in PAIRS {
        let pair = StablePair::unit(a, b).unwrap();
        let rhs = balance_rhs(&pair, &h).unwrap().value;
        let reduced = balance_rhs_w_only(b, &g, &opts).unwrap().value;
        assert!(close(rhs, reduced, 1e-8), "({a},{b}): {rhs} vs {reduced}");
        let lhs = balance_lhs(&pair, &h).unwrap().value;
        assert!(close(lhs, reduced, 1e-6), "({a},{b}): {lhs} vs {reduced}");
    }
}

#[test]
fn w_only_reduction_of_an_indicator_is_explicit() {
    // ((β-1)/β) ∫_{1/2}^{2} u^{-β} du
    let beta: f64 = 1.5;
    let g = TestFunction::Indicator { lo: -2.0, hi: -0.5 };
    let want = (beta - 1.0) / beta * (0.5f64.powf(1.0 - beta) - 2f64.powf(1.0 - beta)) / (beta - 1.0);
    let got = balance_rhs_w_only(beta, &g, &BalanceOptions::default()).unwrap().value;
    assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    let touching = TestFunction::Indicator { lo: -1.0, hi: 0.0 };
    assert!(balance_rhs_w_only(beta, &touching, &BalanceOptions::default()).is_err());
}

#[test]
fn zero_and_linearity() {
    let pair = StablePair::unit(1.8, 1.5).unwrap();
    assert_eq!(balance_lhs(&pair, &TestFunction2D::Zero).unwrap().value, 0.0);
    assert_eq!(balance_rhs(&pair, &TestFunction2D::Zero).unwrap().value, 0.0);
    let scaled_zero = TestFunction2D::Scaled(0.0, Box::new(square()));
    assert_eq!(balance_lhs(&pair, &scaled_zero).unwrap().value, 0.0);
    let one = balance_lhs(&pair, &square()).unwrap().value;
    let two = balance_lhs(&pair, &TestFunction2D::Scaled(2.0, Box::new(square()))).unwrap().value;
    assert_eq!(two, 2.0 * one);
    let one = balance_rhs(&pair, &square()).unwrap().value;
    let two = balance_rhs(&pair, &TestFunction2D::Scaled(2.0, Box::new(square()))).unwrap().value;
    assert_eq!(two, 2.0 * one);
}

#[test]
fn wrong_pair_is_detected() {
    let pair = StablePair::unit(1.8, 1.5).unwrap();
    let rhs = balance_rhs(&pair, &square()).unwrap().value;
    for (a, b) in [(1.8, 1.3), (1.9, 1.5), (1.6, 1.4)] {
        let wrong = LandingFunction::stable_power(a, b).unwrap();
        let lhs = balance_lhs_with(1.8, &wrong, &square(), &BalanceOptions::default()).unwrap().value;
        assert!((lhs - rhs).abs() > 1e-2 * lhs.abs(), "({a},{b}): {lhs} vs {rhs}");
    }
}

#[test]
fn custom_landing_has_no_power_form() {
    let custom = LandingFunction::custom(|_, y| 2.0 * y);
    let r = balance_lhs_with(1.8, &custom, &square(), &BalanceOptions::default());
    assert!(matches!(r, Err(Error::Config(_))));
}

#[test]
fn support_touching_the_origin_is_rejected() {
    let pair = StablePair::unit(1.8, 1.5).unwrap();
    let h = TestFunction2D::Box { v_lo: 0.0, v_hi: 1.0, w_lo: -1.0, w_hi: 0.0 };
    assert!(matches!(balance_lhs(&pair, &h), Err(Error::Config(_))));
    assert!(matches!(balance_rhs(&pair, &h), Err(Error::Config(_))));
    // touching only one axis is fine
    let h = TestFunction2D::Box { v_lo: 0.0, v_hi: 1.0, w_lo: -1.0, w_hi: -0.5 };
    assert!(balance_report(&pair, &h).unwrap().pass);
}

#[test]
fn support_outside_the_quadrant_is_empty() {
    let pair = StablePair::unit(1.8, 1.5).unwrap();
    let h = TestFunction2D::Box { v_lo: -2.0, v_hi: -1.0, w_lo: -1.0, w_hi: -0.5 };
    assert_eq!(balance_lhs(&pair, &h).unwrap().value, 0.0);
}

#[test]
fn reference_density_values() {
    let pair = StablePair::unit(1.8, 1.5).unwrap();
    assert!((pair.reference_density(0.5) - 0.8).abs() < 1e-15);
    assert!((pair.reference_density(-0.5) - 0.5).abs() < 1e-15);
    assert!((pair.reference_density(0.0) - 0.8).abs() < 1e-15);
    let normalized = StablePair::new(1.8, 1.5, 0.8, 1.0).unwrap();
    assert_eq!(normalized.reference_density(3.0), 1.0);
}

#[test]
fn matched_epsilon_maps_jump_thresholds() {
    // a jump of size T for X lands at depth T^{(α-1)/(β-1)}·s
    let pair = StablePair::unit(1.8, 1.5).unwrap();
    let e = pair.matched_epsilon(0.01);
    assert!((e - 0.01f64.powf(1.6)).abs() < 1e-18);
    assert_eq!(pair.matched_epsilon(1.0), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn identities_vanish_for_random_pairs(
        beta in 1.05f64..1.9, gap in 0.02f64..0.5, s in 0.01f64..0.99, t in 0.2f64..5.0,
    ) {
        let alpha = (beta + gap).min(1.98);
        prop_assert!(alpha > beta);
        let pair = StablePair::unit(alpha, beta).unwrap();
        let (r1, r2) = landing_identity_residual(&pair, s, t).unwrap();
        let scale = 1.0 + t.powf(-1.0 / (alpha - 1.0)) + t.powf(-1.0 / (beta - 1.0));
        prop_assert!(r1.abs() < 1e-13 * scale && r2.abs() < 1e-13 * scale);
    }
}
