//! Repeated-run calibration studies on artificial data.
//!
//! * rejection study: rejection frequency of the validity test on sensitivity-model
//!   tables, by deviation ratio `u` and risk `alpha`.
//! * misfit sweep: under-fit and over-fit detection frequencies of nested
//!   least-squares predictors, by item count, variance ratio and complexity.
//!   [`MisfitResult::at_exact_complexity`] is the slice of the sweep at the exact complexity.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::anova::{anova, icc_from_anova};
use crate::error::{Error, Result};
use crate::model_fit::{complexity_sweep, Verdict};
use crate::resampling::{plan_groups, resample_series};
use crate::rng::{child_seed, Domain};
use crate::synthetic::{gen_regression_problem, gen_sensitivity, RegressionSpec, SensitivitySpec};
use crate::validity::validity_test;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RejectionConfig {
    pub m: usize,
    pub n: usize,
    pub q: f64,
    pub us: Vec<f64>,
    pub alphas: Vec<f64>,
    pub replicates: usize,
    pub target_k: usize,
    pub reps: usize,
}

impl Default for RejectionConfig {
    fn default() -> Self {
        RejectionConfig {
            m: 360,
            n: 120,
            q: 1.0 / 16.0,
            us: vec![0.0, 1.0 / 36.0, 1.0 / 16.0, 0.25],
            alphas: vec![0.01, 0.05],
            replicates: 500,
            target_k: 12,
            reps: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RejectionRow {
    pub u: f64,
    pub alpha: f64,
    pub rejections: usize,
    pub reps: usize,
    pub frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RejectionResult {
    pub config: RejectionConfig,
    pub seed: u64,
    pub rows: Vec<RejectionRow>,
    /// Validity-test p-values, one vector per `u` in config order.
    pub p_values: Vec<Vec<f64>>,
}

/// Validity-test p-value for one sensitivity-model table.
pub fn sensitivity_p_value(cfg: &RejectionConfig, u: f64, seed: u64) -> Result<f64> {
    let spec = SensitivitySpec::with_q_u(cfg.m, cfg.n, cfg.q, u, seed);
    let table = gen_sensitivity(&spec)?;
    let plan = plan_groups(cfg.n, cfg.target_k)?;
    let series = resample_series(&table, &plan, cfg.replicates, seed)?;
    Ok(validity_test(&series, cfg.n)?.p_value)
}

pub fn run_rejection_study(cfg: &RejectionConfig, seed: u64) -> Result<RejectionResult> {
    if cfg.reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    let mut p_values = Vec::with_capacity(cfg.us.len());
    for (ui, &u) in cfg.us.iter().enumerate() {
        let ps = (0..cfg.reps)
            .into_par_iter()
            .map(|rep| {
                let s = child_seed(seed, Domain::Calibration, ui as u64, rep as u64);
                sensitivity_p_value(cfg, u, s)
            })
            .collect::<Result<Vec<_>>>()?;
        p_values.push(ps);
    }
    let mut rows = Vec::new();
    for &alpha in &cfg.alphas {
        for (ps, &u) in p_values.iter().zip(&cfg.us) {
            let rejections = ps.iter().filter(|&&p| p < alpha).count();
            rows.push(RejectionRow {
                u,
                alpha,
                rejections,
                reps: cfg.reps,
                frequency: rejections as f64 / cfg.reps as f64,
            });
        }
    }
    Ok(RejectionResult {
        config: cfg.clone(),
        seed,
        rows,
        p_values,
    })
}

pub fn rejection_csv(res: &RejectionResult) -> String {
    let mut out = String::from("alpha,u,rejections,reps,frequency\n");
    for r in &res.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.alpha, r.u, r.rejections, r.reps, r.frequency
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MisfitConfig {
    pub ms: Vec<usize>,
    pub qs: Vec<f64>,
    pub n: usize,
    pub k0: usize,
    pub k_max: usize,
    pub k_min: usize,
    pub alpha: f64,
    pub reps: usize,
}

impl Default for MisfitConfig {
    fn default() -> Self {
        MisfitConfig {
            ms: vec![61, 610],
            qs: vec![0.25, 1.0 / 16.0],
            n: 40,
            k0: 20,
            k_max: 60,
            k_min: 2,
            alpha: 0.01,
            reps: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MisfitRow {
    pub m: usize,
    pub q: f64,
    pub k: usize,
    pub reps: usize,
    pub mean_statistic: f64,
    pub mean_lower: f64,
    pub mean_upper: f64,
    pub underfit: f64,
    pub overfit: f64,
    pub misfit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MisfitResult {
    pub config: MisfitConfig,
    pub seed: u64,
    pub rows: Vec<MisfitRow>,
}

impl MisfitResult {
    /// Rows at the exact complexity `k0`.
    pub fn at_exact_complexity(&self) -> Vec<&MisfitRow> {
        self.rows.iter().filter(|r| r.k == self.config.k0).collect()
    }

    pub fn row(&self, m: usize, q: f64, k: usize) -> Option<&MisfitRow> {
        self.rows
            .iter()
            .find(|r| r.m == m && (r.q - q).abs() < 1e-12 && r.k == k)
    }
}

struct RepOutcome {
    lower: f64,
    upper: f64,
    stats: Vec<f64>,
    verdicts: Vec<Verdict>,
}

fn misfit_rep(cfg: &MisfitConfig, m: usize, q: f64, seed: u64) -> Result<RepOutcome> {
    let spec = RegressionSpec::with_q(m, cfg.n, cfg.k0, cfg.k_max, q, seed);
    let problem = gen_regression_problem(&spec)?;
    let est = icc_from_anova(&anova(&problem.table)?, &[1.0 - cfg.alpha])?;
    let ci = est.interval(1.0 - cfg.alpha)?;
    let sweep = complexity_sweep(&problem, cfg.k_min..=cfg.k_max, &est, cfg.alpha)?;
    Ok(RepOutcome {
        lower: ci.lower,
        upper: ci.upper,
        stats: sweep.iter().map(|p| p.statistic).collect(),
        verdicts: sweep.iter().map(|p| p.verdict).collect(),
    })
}

pub fn run_misfit(cfg: &MisfitConfig, seed: u64) -> Result<MisfitResult> {
    if cfg.reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    if cfg.k_min < 2 || cfg.k_min > cfg.k_max {
        return Err(Error::InvalidParameter(format!(
            "complexity range {}..={} is empty or starts below 2",
            cfg.k_min, cfg.k_max
        )));
    }
    let mut rows = Vec::new();
    for (mi, &m) in cfg.ms.iter().enumerate() {
        for (qi, &q) in cfg.qs.iter().enumerate() {
            let tag = (mi * cfg.qs.len() + qi) as u64;
            let outcomes = (0..cfg.reps)
                .into_par_iter()
                .map(|rep| {
                    let s = child_seed(seed, Domain::Calibration, 1000 + tag, rep as u64);
                    misfit_rep(cfg, m, q, s)
                })
                .collect::<Result<Vec<_>>>()?;
            let reps = outcomes.len() as f64;
            let mean_lower = outcomes.iter().map(|o| o.lower).sum::<f64>() / reps;
            let mean_upper = outcomes.iter().map(|o| o.upper).sum::<f64>() / reps;
            for (idx, k) in (cfg.k_min..=cfg.k_max).enumerate() {
                let count =
                    |v: Verdict| outcomes.iter().filter(|o| o.verdicts[idx] == v).count() as f64 / reps;
                let underfit = count(Verdict::Underfit);
                let overfit = count(Verdict::Overfit);
                rows.push(MisfitRow {
                    m,
                    q,
                    k,
                    reps: outcomes.len(),
                    mean_statistic: outcomes.iter().map(|o| o.stats[idx]).sum::<f64>() / reps,
                    mean_lower,
                    mean_upper,
                    underfit,
                    overfit,
                    misfit: underfit + overfit,
                });
            }
        }
    }
    Ok(MisfitResult {
        config: cfg.clone(),
        seed,
        rows,
    })
}

pub fn misfit_csv<'a>(rows: impl IntoIterator<Item = &'a MisfitRow>) -> String {
    let mut out = String::from("m,q,k,reps,mean_statistic,mean_lower,mean_upper,underfit,overfit,misfit\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.m,
            r.q,
            r.k,
            r.reps,
            r.mean_statistic,
            r.mean_lower,
            r.mean_upper,
            r.underfit,
            r.overfit,
            r.misfit
        );
    }
    out
}
