//! End-to-end validation and fit judgement, producing serializable reports.

use serde::Serialize;

use crate::anova::{anova, icc_from_anova, AnovaResult, ConfidenceInterval, DEFAULT_CONF_PROBS};
use crate::error::{Error, Result};
use crate::model_fit::{fit_statistic, judge_fit, FitVerdict, PredictionVector, DEFAULT_ALPHA};
use crate::resampling::{
    plan_groups, resample_series, GroupPlan, ResamplingSeries, DEFAULT_REPLICATES, DEFAULT_TARGET_K,
};
use crate::table::{item_means, DataTable};
use crate::validity::{validity_test, ValidityReport};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidateConfig {
    pub conf_probs: Vec<f64>,
    pub alpha: f64,
    pub replicates: usize,
    pub target_k: usize,
    pub seed: u64,
}

impl ValidateConfig {
    pub fn new(seed: u64) -> Self {
        ValidateConfig {
            conf_probs: DEFAULT_CONF_PROBS.to_vec(),
            alpha: DEFAULT_ALPHA,
            replicates: DEFAULT_REPLICATES,
            target_k: DEFAULT_TARGET_K,
            seed,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain("validate", "alpha", self.alpha));
        }
        if let Some(&p) = self.conf_probs.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::domain("validate", "confidence probability", p));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesRow {
    pub group_size: usize,
    pub r_mean: f64,
    pub r_sd: f64,
    pub predicted: f64,
}

/// Everything `validate` computes. Field names follow the console output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationOutput {
    pub schema_version: u32,
    pub seed: u64,
    pub replicates: usize,
    pub target_k: usize,
    pub alpha: f64,
    pub items: usize,
    pub participants: usize,
    pub missing_fraction: f64,
    pub anova: AnovaResult,
    /// Variance ratio from the ANOVA.
    pub q_anova: Option<f64>,
    pub icc: f64,
    pub f_obs: f64,
    pub intervals: Vec<ConfidenceInterval>,
    pub group_plan: GroupPlan,
    /// ICC extrapolated to all participants from the resampling fit.
    pub r_resampled: f64,
    pub q_resampled: f64,
    pub chi2: f64,
    pub df: usize,
    pub p_value: f64,
    /// `p_value < alpha`: the expected correlation is not a reliable reference.
    pub significant: bool,
    pub converged: bool,
    pub iterations: usize,
    pub series: Vec<SeriesRow>,
    pub item_means: Vec<f64>,
    pub warnings: Vec<String>,
}

impl ValidationOutput {
    pub fn series(&self) -> ResamplingSeries {
        ResamplingSeries {
            entries: self
                .series
                .iter()
                .map(|s| crate::resampling::SeriesEntry {
                    group_size: s.group_size,
                    r_mean: s.r_mean,
                    r_sd: s.r_sd,
                })
                .collect(),
            replicates: self.replicates,
        }
    }
}

/// ANOVA, ICC with intervals, resampling series and validity test.
pub fn run_validation(table: &DataTable, cfg: &ValidateConfig) -> Result<ValidationOutput> {
    cfg.check()?;
    let a = anova(table)?;
    let est = icc_from_anova(&a, &cfg.conf_probs)?;
    let plan = plan_groups(table.participants(), cfg.target_k)?;
    let series = resample_series(table, &plan, cfg.replicates, cfg.seed)?;
    let report: ValidityReport = validity_test(&series, table.participants())?;

    let mut warnings = est.warnings.clone();
    warnings.extend(report.warnings.iter().cloned());
    let rows = series
        .entries
        .iter()
        .zip(&report.predicted)
        .map(|(e, &predicted)| SeriesRow {
            group_size: e.group_size,
            r_mean: e.r_mean,
            r_sd: e.r_sd,
            predicted,
        })
        .collect();
    Ok(ValidationOutput {
        schema_version: SCHEMA_VERSION,
        seed: cfg.seed,
        replicates: cfg.replicates,
        target_k: cfg.target_k,
        alpha: cfg.alpha,
        items: table.items(),
        participants: table.participants(),
        missing_fraction: table.missing_fraction(),
        anova: a,
        q_anova: est.q_hat,
        icc: est.icc,
        f_obs: est.f_obs,
        intervals: est.intervals.clone(),
        group_plan: plan,
        r_resampled: report.extrapolated_r,
        q_resampled: report.q_opt,
        chi2: report.chi2,
        df: report.df,
        p_value: report.p_value,
        significant: report.is_significant(cfg.alpha),
        converged: report.converged,
        iterations: report.iterations,
        series: rows,
        item_means: item_means(table).means,
        warnings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitOutput {
    pub schema_version: u32,
    pub validation: ValidationOutput,
    /// `None` when the judgement was refused because the validity test rejected.
    pub fit: Option<FitVerdict>,
    pub override_invalid: bool,
    pub refused: bool,
}

/// Validates `table`, then judges `pred` against the ICC interval at
/// `1 - alpha`. Refuses to judge when the validity test is significant unless
/// `override_invalid` is set.
pub fn run_fit(
    table: &DataTable,
    pred: &PredictionVector,
    cfg: &ValidateConfig,
    override_invalid: bool,
) -> Result<FitOutput> {
    let validation = run_validation(table, cfg)?;
    let refused = validation.significant && !override_invalid;
    let fit = if refused {
        None
    } else {
        let est = icc_from_anova(&validation.anova, &cfg.conf_probs)?;
        let stat = fit_statistic(&validation.item_means, pred)?;
        Some(judge_fit(&stat, &est, cfg.alpha)?)
    };
    Ok(FitOutput {
        schema_version: SCHEMA_VERSION,
        validation,
        fit,
        override_invalid,
        refused,
    })
}
