mod common;

use common::{binomial_band_99, textbook_anova};
use ecvt::synthetic::{gen_additive, AdditiveSpec};
use ecvt::{anova, extrapolate_icc, icc_from_anova, participants_needed, q_from_icc, DataTable};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn random_table(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<f64> {
    (0..m * n).map(|_| rng.random_range(-50.0..150.0)).collect()
}

#[test]
fn matches_textbook_anova_on_20_by_8() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let rows = random_table(&mut rng, 20, 8);
    let a = anova(&DataTable::complete(20, 8, &rows).unwrap()).unwrap();
    let o = textbook_anova(20, 8, &rows);
    for (got, want) in [(a.ssi, o.ssi), (a.ssp, o.ssp), (a.sse, o.sse), (a.mse, o.mse)] {
        assert!(rel_close(got, want, 1e-9), "{got} vs {want}");
    }
}

#[test]
fn ci_coverage_monte_carlo() {
    // 1000 additive tables, m = 60, n = 20; the 95% interval should cover rho
    let (m, n, q) = (60, 20, 0.1);
    let rho = extrapolate_icc(q, n as f64);
    let reps = 1000;
    let covered = (0..reps)
        .filter(|&s| {
            let t = gen_additive(&AdditiveSpec::with_q(m, n, q, 10_000 + s)).unwrap();
            let est = icc_from_anova(&anova(&t).unwrap(), &[0.95]).unwrap();
            est.intervals[0].contains(rho)
        })
        .count();
    let freq = covered as f64 / reps as f64;
    println!("95% interval coverage over {reps} tables: {freq:.3}");
    assert!((freq - 0.95).abs() <= 0.02, "coverage {freq}");
    let (lo, hi) = binomial_band_99(reps as usize, 0.95);
    assert!((lo..=hi).contains(&covered), "{covered} outside {lo}..={hi}");
}

#[test]
fn icc_mean_tracks_population_value() {
    let (m, n, q) = (200, 30, 0.05);
    let rho = extrapolate_icc(q, n as f64);
    let reps = 200;
    let mean = (0..reps)
        .map(|s| {
            let t = gen_additive(&AdditiveSpec::with_q(m, n, q, 500 + s)).unwrap();
            icc_from_anova(&anova(&t).unwrap(), &[]).unwrap().icc
        })
        .sum::<f64>()
        / reps as f64;
    assert!((mean - rho).abs() < 0.01, "mean icc {mean} vs {rho}");
}

#[test]
fn missing_cells_use_present_counts() {
    // removing one cell of a 3 x 3 table: check against totals computed by hand
    let t = DataTable::from_rows(&[
        vec![Some(1.0), Some(2.0), Some(4.0)],
        vec![Some(2.0), None, Some(7.0)],
        vec![Some(5.0), Some(5.0), Some(9.0)],
    ])
    .unwrap();
    let a = anova(&t).unwrap();
    let xs = [1.0, 2.0, 4.0, 2.0, 7.0, 5.0, 5.0, 9.0];
    let total: f64 = xs.iter().sum();
    let nn = 8.0;
    let corr = total * total / nn;
    let ss = xs.iter().map(|x| x * x).sum::<f64>() - corr;
    let ssi = 7.0f64.powi(2) / 3.0 + 9.0f64.powi(2) / 2.0 + 19.0f64.powi(2) / 3.0 - corr;
    let ssp = 8.0f64.powi(2) / 3.0 + 7.0f64.powi(2) / 2.0 + 20.0f64.powi(2) / 3.0 - corr;
    assert!(rel_close(a.ss_total, ss, 1e-12));
    assert!(rel_close(a.ssi, ssi, 1e-12));
    assert!(rel_close(a.ssp, ssp, 1e-12));
    assert!(rel_close(a.sse, ss - ssi - ssp, 1e-12));
    assert_eq!(a.dfe, 8.0 - 1.0 - 2.0 - 2.0);
}

#[test]
fn inverse_formulas() {
    assert!((extrapolate_icc(1.0 / 16.0, 16.0) - 0.5).abs() < 1e-15);
    assert!((q_from_icc(0.5, 16.0).unwrap() - 1.0 / 16.0).abs() < 1e-15);
    assert_eq!(q_from_icc(0.0, 7.0).unwrap(), 0.0);
    assert!(q_from_icc(1.0, 7.0).is_err());
    assert!((participants_needed(1.0 / 16.0, 0.5).unwrap() - 16.0).abs() < 1e-12);
    assert!((participants_needed(0.1333, 0.769).unwrap() - 25.0).abs() < 0.05);
    assert!((q_from_icc(0.9261, 94.0).unwrap() - 0.1333).abs() < 1e-4);
    assert!(participants_needed(0.0, 0.5).is_err());
}

fn table_strategy() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (2usize..=30, 2usize..=10)
        .prop_flat_map(|(m, n)| (Just(m), Just(n), prop::collection::vec(-1000.0f64..1000.0, m * n)))
}

proptest! {
    #![proptest_config(common::cases(96))]

    #[test]
    fn partition_identity((m, n, rows) in table_strategy()) {
        let a = anova(&DataTable::complete(m, n, &rows).unwrap()).unwrap();
        let parts = a.ssi + a.ssp + a.sse;
        prop_assert!((parts - a.ss_total).abs() <= 1e-9 * a.ss_total.max(1e-300));
    }

    #[test]
    fn textbook_oracle((m, n, rows) in table_strategy()) {
        let a = anova(&DataTable::complete(m, n, &rows).unwrap()).unwrap();
        let o = textbook_anova(m, n, &rows);
        for (got, want) in [(a.ssi, o.ssi), (a.ssp, o.ssp), (a.sse, o.sse),
                            (a.msi, o.msi), (a.msp, o.msp), (a.mse, o.mse)] {
            prop_assert!(rel_close(got, want, 1e-9), "{} vs {}", got, want);
        }
    }

    #[test]
    fn affine_invariance((m, n, rows) in table_strategy(), scale in 0.001f64..1000.0, shift in -1e4f64..1e4) {
        let t = DataTable::complete(m, n, &rows).unwrap();
        let u = t.map_present(|_, _, x| scale * x + shift);
        let probs = [0.95, 0.99];
        let a = icc_from_anova(&anova(&t).unwrap(), &probs).unwrap();
        let b = icc_from_anova(&anova(&u).unwrap(), &probs).unwrap();
        prop_assert!(rel_close(a.icc, b.icc, 1e-10) || (a.icc - b.icc).abs() < 1e-12);
        prop_assert!(rel_close(a.f_obs, b.f_obs, 1e-10));
        match (a.q_hat, b.q_hat) {
            (Some(x), Some(y)) => prop_assert!(rel_close(x, y, 1e-10) || (x - y).abs() < 1e-12),
            (x, y) => prop_assert_eq!(x, y),
        }
        for (ca, cb) in a.intervals.iter().zip(&b.intervals) {
            prop_assert!(rel_close(ca.lower, cb.lower, 1e-10));
            prop_assert!(rel_close(ca.upper, cb.upper, 1e-10));
        }
    }

    #[test]
    fn participant_shift_changes_msp_only((m, n, rows) in table_strategy(), shifts in prop::collection::vec(-100.0f64..100.0, 10)) {
        let t = DataTable::complete(m, n, &rows).unwrap();
        let u = t.map_present(|_, j, x| x + shifts[j]);
        let (a, b) = (anova(&t).unwrap(), anova(&u).unwrap());
        prop_assert!(rel_close(a.msi, b.msi, 1e-8));
        prop_assert!(rel_close(a.mse, b.mse, 1e-8) || (a.mse - b.mse).abs() < 1e-9 * a.ss_total);
        let (ia, ib) = (icc_from_anova(&a, &[]).unwrap(), icc_from_anova(&b, &[]).unwrap());
        prop_assert!((ia.icc - ib.icc).abs() < 1e-8);
    }

    #[test]
    fn icc_identity_and_interval_order((m, n, rows) in table_strategy()) {
        let a = anova(&DataTable::complete(m, n, &rows).unwrap()).unwrap();
        let est = icc_from_anova(&a, &[0.95, 0.99, 0.999]).unwrap();
        if a.msi >= a.mse {
            let q = est.q_hat.unwrap();
            let nq = n as f64 * q;
            prop_assert!((nq / (nq + 1.0) - (a.msi - a.mse) / a.msi).abs() < 1e-12);
        }
        if est.f_obs > 1.0 {
            for ci in &est.intervals {
                prop_assert!(ci.lower <= est.icc && est.icc <= ci.upper);
            }
        }
        let widths: Vec<f64> = est.intervals.iter().map(|c| c.upper - c.lower).collect();
        prop_assert!(widths.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn extrapolation_round_trip(q in 1e-4f64..10.0, n in 1.0f64..1000.0) {
        let rho = extrapolate_icc(q, n);
        prop_assert!(rel_close(q_from_icc(rho, n).unwrap(), q, 1e-10));
        prop_assert!(rel_close(participants_needed(q, rho).unwrap(), n, 1e-10));
    }
}
