//! Independent reference implementations used only by tests.
//!
//! Nothing here calls into the crate's special functions: CDFs come from
//! tanh-sinh quadrature of the density, quantiles from bisection on that
//! quadrature, and ANOVA from the textbook deviation-from-means formulas.

#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

/// Tanh-sinh quadrature of `f` over `[a, b]`.
///
/// `f(x, da, db)` receives the abscissa and its exact distances to both ends,
/// so integrands with endpoint singularities can avoid cancellation.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    let node = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (cu * cu);
        // distance of the node to the nearer end, computed without cancellation
        let d = half * 2.0 / ((2.0 * u.abs()).exp() + 1.0);
        if d <= 0.0 || w == 0.0 {
            return 0.0;
        }
        let (x, da, db) = if u < 0.0 {
            (a + d, d, (b - a) - d)
        } else {
            (b - d, (b - a) - d, d)
        };
        let v = f(x, da, db);
        if v.is_finite() {
            half * w * v
        } else {
            0.0
        }
    };
    let t_max = 6.5;
    let mut h = 1.0;
    let mut sum = node(0.0);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        sum += node(k as f64 * h) + node(-(k as f64) * h);
        k += 1;
    }
    let mut estimate = sum * h;
    for _level in 0..12 {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= t_max {
            sum += node(k as f64 * h) + node(-(k as f64) * h);
            k += 2;
        }
        let next = sum * h;
        let done = (next - estimate).abs() <= 1e-13 * next.abs().max(1e-300);
        estimate = next;
        if done && h < 0.1 {
            break;
        }
    }
    estimate
}

/// Regularized incomplete beta `I_x(a, b)` as `L / (L + U)`, where `L` and
/// `U` integrate the unnormalized density below and above `x`.
pub fn beta_cdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let mode = if a > 1.0 && b > 1.0 {
        (a - 1.0) / (a + b - 2.0)
    } else {
        0.5
    };
    let log_g = |t: f64, one_minus_t: f64| (a - 1.0) * t.ln() + (b - 1.0) * one_minus_t.ln();
    let shift = log_g(mode, 1.0 - mode);
    let sd = (a * b / ((a + b) * (a + b) * (a + b + 1.0))).sqrt();
    let mut cuts = vec![0.0, 1.0, mode, x];
    for k in [1.0, 3.0, 6.0, 12.0, 24.0] {
        cuts.push(mode - k * sd);
        cuts.push(mode + k * sd);
    }
    cuts.retain(|c| (0.0..=1.0).contains(c));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let (mut lower, mut upper) = (0.0, 0.0);
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let piece = tanh_sinh(
            |_, da, db| {
                let t = lo + da;
                let s = (1.0 - hi) + db;
                (log_g(t, s) - shift).exp()
            },
            lo,
            hi,
        );
        if hi <= x {
            lower += piece;
        } else {
            upper += piece;
        }
    }
    lower / (lower + upper)
}

/// Probabilities and degree-of-freedom pairs of the F-quantile check grid (5 x 10).
pub const GRID_P: [f64; 5] = [0.0005, 0.025, 0.5, 0.975, 0.9995];
pub const GRID_DF: [(f64, f64); 10] = [
    (1.0, 1.0),
    (1.0, 10.0),
    (2.0, 2.0),
    (3.0, 60.0),
    (5.0, 200.0),
    (11.0, 400.0),
    (60.0, 2340.0),
    (119.0, 16541.0),
    (769.0, 71378.0),
    (2340.0, 60.0),
];

/// F quantile by bisection of the quadrature CDF in the beta variable.
pub fn f_quantile(p: f64, d1: f64, d2: f64) -> f64 {
    let (a, b) = (0.5 * d1, 0.5 * d2);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-14 * hi {
            break;
        }
        if beta_cdf(mid, a, b) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = 0.5 * (lo + hi);
    u * d2 / ((1.0 - u) * d1)
}

/// Lower regularized incomplete gamma by quadrature of `t^(a-1) e^-t` on
/// `[0, x]` against `[x, inf)` (the latter mapped onto a finite interval).
pub fn gamma_cdf(x: f64, a: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let shift = if a > 1.0 {
        (a - 1.0) * (a - 1.0).ln() - (a - 1.0)
    } else {
        0.0
    };
    let g = |t: f64| ((a - 1.0) * t.ln() - t - shift).exp();
    let lower = tanh_sinh(|_, da, _| g(da), 0.0, x);
    // t = x + s / (1 - s), s in [0, 1)
    let upper = tanh_sinh(
        |_, da, db| {
            let t = x + da / db;
            g(t) / (db * db)
        },
        0.0,
        1.0,
    );
    lower / (lower + upper)
}

/// Textbook two-way ANOVA without replication on a complete row-major table.
#[derive(Debug, Clone, Copy)]
pub struct TextbookAnova {
    pub ssi: f64,
    pub ssp: f64,
    pub sse: f64,
    pub ss_total: f64,
    pub msi: f64,
    pub msp: f64,
    pub mse: f64,
}

pub fn textbook_anova(m: usize, n: usize, rows: &[f64]) -> TextbookAnova {
    let cell = |i: usize, j: usize| rows[i * n + j];
    let grand = rows.iter().sum::<f64>() / (m * n) as f64;
    let row_mean: Vec<f64> = (0..m)
        .map(|i| (0..n).map(|j| cell(i, j)).sum::<f64>() / n as f64)
        .collect();
    let col_mean: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| cell(i, j)).sum::<f64>() / m as f64)
        .collect();
    let ssi = n as f64 * row_mean.iter().map(|r| (r - grand).powi(2)).sum::<f64>();
    let ssp = m as f64 * col_mean.iter().map(|c| (c - grand).powi(2)).sum::<f64>();
    let mut sse = 0.0;
    let mut ss_total = 0.0;
    #[allow(clippy::needless_range_loop)]
    for i in 0..m {
        for j in 0..n {
            sse += (cell(i, j) - row_mean[i] - col_mean[j] + grand).powi(2);
            ss_total += (cell(i, j) - grand).powi(2);
        }
    }
    TextbookAnova {
        ssi,
        ssp,
        sse,
        ss_total,
        msi: ssi / (m - 1) as f64,
        msp: ssp / (n - 1) as f64,
        mse: sse / ((m - 1) * (n - 1)) as f64,
    }
}

/// Kolmogorov-Smirnov statistic of a sample against the uniform law on [0, 1].
pub fn ks_uniform(sample: &[f64]) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let above = (i as f64 + 1.0) / n - x;
            let below = x - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov critical value at level 0.01: `1.628 / sqrt(n)`.
pub fn ks_critical_01(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Central 99% acceptance band for a Binomial(reps, p) count: the smallest
/// `lo` and largest `hi` with at most 0.5% probability outside each side.
pub fn binomial_band_99(reps: usize, p: f64) -> (usize, usize) {
    let ln_fact = |k: usize| (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
    let pmf: Vec<f64> = (0..=reps)
        .map(|k| {
            (ln_fact(reps) - ln_fact(k) - ln_fact(reps - k)
                + k as f64 * p.ln()
                + (reps - k) as f64 * (1.0 - p).ln())
            .exp()
        })
        .collect();
    let mut lo = 0;
    let mut below = 0.0;
    while below + pmf[lo] <= 0.005 {
        below += pmf[lo];
        lo += 1;
    }
    let mut hi = reps;
    let mut above = 0.0;
    while above + pmf[hi] <= 0.005 {
        above += pmf[hi];
        hi -= 1;
    }
    (lo, hi)
}

/// Proptest settings without on-disk failure persistence.
pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases: n,
        failure_persistence: None,
        ..Default::default()
    }
}
