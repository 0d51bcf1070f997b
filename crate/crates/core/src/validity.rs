//! Chi-square test of the expected-correlation law against a resampling
//! series.
//!
//! Under the additive model the mean split-group correlation at group size
//! `g` is `g q / (g q + 1)` for a single `q`. The statistic
//! `T * sum(((r_g - rho_g) / s_g)^2)` is minimized over `q` by Newton-Raphson
//! and compared with a chi-square distribution on `K` degrees of freedom.

use serde::Serialize;

use crate::anova::{extrapolate_icc, q_from_icc};
use crate::error::{Error, Result};
use crate::resampling::ResamplingSeries;
use crate::special::prob_chi2;

pub const NEWTON_TOLERANCE: f64 = 1e-9;
pub const NEWTON_MAX_ITER: usize = 30;
// Standard deviations at or below this are treated as zero (noise-free data).
const MIN_SD: f64 = 1e-12;
const R_CLAMP: f64 = 1.0 - 1e-9;

fn check_series(series: &ResamplingSeries) -> Result<()> {
    if series.entries.is_empty() {
        return Err(Error::InvalidParameter("empty resampling series".into()));
    }
    if let Some(e) = series.entries.iter().find(|e| !(e.r_sd > MIN_SD)) {
        return Err(Error::DegenerateData(format!(
            "correlations at group size {} have zero spread; the data look noise-free",
            e.group_size
        )));
    }
    Ok(())
}

/// `T * sum_g ((r_g - rho_g(q)) / s_g)^2`.
pub fn chi2_statistic(series: &ResamplingSeries, q: f64) -> Result<f64> {
    check_series(series)?;
    let t = series.replicates as f64;
    Ok(t * series
        .entries
        .iter()
        .map(|e| {
            let z = (e.r_mean - extrapolate_icc(q, e.group_size as f64)) / e.r_sd;
            z * z
        })
        .sum::<f64>())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QFit {
    pub q: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Newton-Raphson on the derivative of the chi-square statistic in `q`.
///
/// Starts from the `1/s^2`-weighted mean of the per-size `q` estimates; a mean
/// correlation at or above 1 enters that start as `1 - 1e-9`. Stops once
/// `|dq| < 1e-9 |q|`; after 30 steps the last iterate is returned with
/// `converged == false`. `q` is not constrained to be positive.
pub fn fit_q(series: &ResamplingSeries) -> Result<QFit> {
    check_series(series)?;
    let t = series.replicates as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for e in &series.entries {
        let w = 1.0 / (e.r_sd * e.r_sd);
        num += w * q_from_icc(e.r_mean.min(R_CLAMP), e.group_size as f64)?;
        den += w;
    }
    let mut q0 = num / den;
    let mut q = q0;
    let mut iterations = 0;
    while iterations < NEWTON_MAX_ITER {
        let (mut d1, mut d2) = (0.0, 0.0);
        for e in &series.entries {
            let n = e.group_size as f64;
            let rho = extrapolate_icc(q0, n);
            // rho / q, written so that q = 0 is well defined
            let rq = n / (n * q0 + 1.0);
            let s2 = e.r_sd * e.r_sd;
            d1 += rq * (e.r_mean - rho) * (rho - 1.0) / s2;
            d2 += rq * rq * ((rho - 1.0).powi(2) + 2.0 * (e.r_mean - rho) * (1.0 - rho)) / s2;
        }
        let (d1, d2) = (2.0 * t * d1, 2.0 * t * d2);
        let dq = d1 / d2;
        iterations += 1;
        if !dq.is_finite() {
            return Ok(QFit {
                q: q0,
                converged: false,
                iterations,
            });
        }
        q = q0 - dq;
        if dq.abs() < (NEWTON_TOLERANCE * q).abs() {
            return Ok(QFit {
                q,
                converged: true,
                iterations,
            });
        }
        q0 = q;
    }
    Ok(QFit {
        q,
        converged: false,
        iterations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidityReport {
    pub q_opt: f64,
    pub chi2: f64,
    pub df: usize,
    pub p_value: f64,
    /// Expected correlation at each group size of the series, at `q_opt`.
    pub predicted: Vec<f64>,
    /// Expected correlation for the full participant count.
    pub extrapolated_r: f64,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl ValidityReport {
    pub fn is_significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

pub fn validity_test(series: &ResamplingSeries, n: usize) -> Result<ValidityReport> {
    let fit = fit_q(series)?;
    let chi2 = chi2_statistic(series, fit.q)?;
    let df = series.entries.len();
    let p_value = 1.0 - prob_chi2(chi2, df as f64)?;
    let mut warnings = Vec::new();
    if !fit.converged {
        warnings.push(format!(
            "Newton-Raphson failed to converge after {} iterations",
            fit.iterations
        ));
    }
    if fit.q < 0.0 {
        warnings.push(format!(
            "fitted q = {} is negative; the items show no reproducible effect",
            fit.q
        ));
    }
    let predicted = series
        .entries
        .iter()
        .map(|e| extrapolate_icc(fit.q, e.group_size as f64))
        .collect();
    Ok(ValidityReport {
        q_opt: fit.q,
        chi2,
        df,
        p_value,
        predicted,
        extrapolated_r: extrapolate_icc(fit.q, n as f64),
        converged: fit.converged,
        iterations: fit.iterations,
        warnings,
    })
}
