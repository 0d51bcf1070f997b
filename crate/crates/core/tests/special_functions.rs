mod common;

use common::{beta_cdf, f_quantile, gamma_cdf, GRID_DF, GRID_P};
use ecvt::special::{
    cdf_f, prob_chi2, quant_beta, quant_f, reg_inc_beta, reg_lower_gamma, QUANTILE_TOLERANCE,
};
use proptest::prelude::*;

#[test]
fn quadrature_oracle_sanity() {
    // uniform and a closed form, to trust the oracle itself
    assert!((beta_cdf(0.3, 1.0, 1.0) - 0.3).abs() < 1e-14);
    let x: f64 = 0.3;
    let closed = 1.0 - (1.0 - x).powi(5);
    assert!((beta_cdf(x, 1.0, 5.0) - closed).abs() < 1e-13);
    assert!((gamma_cdf(3.0, 1.0) - (1.0 - (-3.0_f64).exp())).abs() < 1e-13);
}

#[test]
fn reg_inc_beta_matches_quadrature() {
    let v = reg_inc_beta(0.3, 2.0, 5.0).unwrap();
    assert!((v - beta_cdf(0.3, 2.0, 5.0)).abs() < 1e-10, "{v}");
    for &(x, a, b) in &[
        (0.01, 0.5, 0.5),
        (0.99, 0.5, 3.0),
        (0.2, 30.0, 1170.0),
        (0.0086, 59.5, 8270.5),
        (0.6, 2.5, 2.5),
        (0.999, 300.0, 0.5),
    ] {
        let got = reg_inc_beta(x, a, b).unwrap();
        let want = beta_cdf(x, a, b);
        assert!(
            (got - want).abs() < 1e-10,
            "I_{x}({a},{b}) = {got}, oracle {want}"
        );
    }
}

#[test]
fn quant_f_matches_oracle_on_grid() {
    let tol = 1e-4;
    let mut worst = 0.0_f64;
    for &p in &GRID_P {
        for &(d1, d2) in &GRID_DF {
            let got = quant_f(p, d1, d2).unwrap();
            let want = f_quantile(p, d1, d2);
            let err = (got - want).abs() / want.abs().max(1.0);
            worst = worst.max(err);
            assert!(err <= tol, "F^-1({p}; {d1}, {d2}) = {got}, oracle {want}");
        }
    }
    println!("worst scaled quant_f error over grid: {worst:e}");
}

#[test]
fn quant_f_large_anova_dfs() {
    let got = quant_f(0.995, 119.0, 16541.0).unwrap();
    let want = f_quantile(0.995, 119.0, 16541.0);
    assert!((got - want).abs() < 1e-4, "{got} vs {want}");
}

#[test]
fn prob_chi2_two_df_closed_form() {
    for &x in &[0.0, 1e-8, 0.3, 2.0 * 2f64.ln(), 5.0, 17.5, 60.0] {
        let want = 1.0 - (-x / 2.0_f64).exp();
        assert!((prob_chi2(x, 2.0).unwrap() - want).abs() <= 1e-10, "x = {x}");
    }
    assert!((prob_chi2(2.0 * 2f64.ln(), 2.0).unwrap() - 0.5).abs() < 1e-15);
    assert_eq!(prob_chi2(0.0, 5.0).unwrap(), 0.0);
}

#[test]
fn chi2_against_quadrature() {
    for &(x, df) in &[
        (10.345, 11.0),
        (3.0, 1.0),
        (40.0, 12.0),
        (0.5, 14.0),
        (120.0, 100.0),
    ] {
        let got = prob_chi2(x, df).unwrap();
        let want = gamma_cdf(x / 2.0, df / 2.0);
        assert!((got - want).abs() < 1e-9, "chi2({df}) at {x}: {got} vs {want}");
    }
}

#[test]
fn domain_errors() {
    assert!(reg_inc_beta(-0.1, 1.0, 1.0).is_err());
    assert!(reg_inc_beta(0.5, 0.0, 1.0).is_err());
    assert!(quant_f(1.0, 2.0, 3.0).is_err());
    assert!(quant_f(0.5, -1.0, 3.0).is_err());
    assert!(prob_chi2(-1.0, 3.0).is_err());
    assert!(reg_lower_gamma(1.0, f64::NAN).is_err());
}

proptest! {
    #![proptest_config(common::cases(64))]

    #[test]
    fn quant_beta_round_trip(p in 0.001f64..0.999, a in 0.5f64..400.0, b in 0.5f64..400.0) {
        let x = quant_beta(p, a, b).unwrap();
        prop_assert!((reg_inc_beta(x, a, b).unwrap() - p).abs() <= QUANTILE_TOLERANCE);
    }

    #[test]
    fn quant_f_reflection(p in 0.001f64..0.999, d1 in 1u32..3000, d2 in 1u32..3000) {
        let (d1, d2) = (f64::from(d1), f64::from(d2));
        let prod = quant_f(p, d1, d2).unwrap() * quant_f(1.0 - p, d2, d1).unwrap();
        prop_assert!((prod - 1.0).abs() <= 1e-6, "product {}", prod);
    }

    #[test]
    fn quant_f_increasing(p in 0.01f64..0.98, dp in 0.001f64..0.01, d1 in 1u32..500, d2 in 1u32..500) {
        let (d1, d2) = (f64::from(d1), f64::from(d2));
        prop_assert!(quant_f(p + dp, d1, d2).unwrap() > quant_f(p, d1, d2).unwrap());
    }

    #[test]
    fn cdf_inverts_quantile(p in 0.01f64..0.99, d1 in 1u32..500, d2 in 1u32..500) {
        let (d1, d2) = (f64::from(d1), f64::from(d2));
        let x = quant_f(p, d1, d2).unwrap();
        prop_assert!((cdf_f(x, d1, d2).unwrap() - p).abs() <= QUANTILE_TOLERANCE);
    }

    #[test]
    fn beta_cdf_agrees_with_quadrature(x in 0.001f64..0.999, a in 0.5f64..50.0, b in 0.5f64..50.0) {
        let got = reg_inc_beta(x, a, b).unwrap();
        prop_assert!((got - beta_cdf(x, a, b)).abs() <= 1e-8);
    }

    #[test]
    fn chi2_monotone(x in 0.0f64..200.0, dx in 0.0f64..5.0, df in 1u32..200) {
        let df = f64::from(df);
        prop_assert!(prob_chi2(x + dx, df).unwrap() >= prob_chi2(x, df).unwrap());
    }

    #[test]
    fn gamma_cdf_agrees_with_quadrature(x in 0.01f64..100.0, a in 0.5f64..60.0) {
        let got = reg_lower_gamma(a, x).unwrap();
        prop_assert!((got - gamma_cdf(x, a)).abs() <= 1e-8);
    }
}
