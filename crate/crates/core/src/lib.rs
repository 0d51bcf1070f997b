//! Validated intraclass correlation for item-by-participant data tables.
//!
//! The crate estimates the ICC of a table by two-way ANOVA (with missing
//! cells), checks by permutation resampling that the table follows the
//! additive model the ICC relies on, and uses the ICC confidence interval to
//! flag item-level model predictions as under-fitting or over-fitting.
//!
//! ```
//! use ecvt::{anova, icc_from_anova, DataTable};
//!
//! let t = DataTable::complete(2, 2, &[1.0, 3.0, 2.0, 5.0]).unwrap();
//! let est = icc_from_anova(&anova(&t).unwrap(), &[0.95]).unwrap();
//! // item mean square 2.25, residual 0.25
//! assert!((est.icc - 8.0 / 9.0).abs() < 1e-12);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anova;
pub mod calibrate;
pub mod error;
pub mod linalg;
pub mod model_fit;
pub mod pipeline;
pub mod plot;
pub mod resampling;
pub mod rng;
pub mod special;
pub mod synthetic;
pub mod table;
pub mod validity;

pub use anova::{
    anova, confidence_interval, extrapolate_icc, icc_from_anova, participants_needed, q_from_icc,
    AnovaResult, ConfidenceInterval, IccEstimate,
};
pub use error::{Error, Result};
pub use model_fit::{
    align_predictions, classify, complexity_sweep, fit_statistic, judge_fit, load_predictions, FitStatistic,
    FitVerdict, PredictionKind, PredictionVector, Verdict,
};
pub use pipeline::{run_fit, run_validation, FitOutput, ValidateConfig, ValidationOutput};
pub use resampling::{plan_groups, resample_series, GroupPlan, ResamplingSeries, SeriesEntry};
pub use special::{prob_chi2, quant_beta, quant_f, reg_inc_beta};
pub use synthetic::{
    gen_additive, gen_regression_problem, gen_sensitivity, AdditiveSpec, RegressionProblem, RegressionSpec,
    SensitivitySpec,
};
pub use table::{item_means, load_table, pearson_r, write_table, DataTable, LoadOptions};
pub use validity::{chi2_statistic, fit_q, validity_test, ValidityReport};
