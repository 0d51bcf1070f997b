//! C ABI over the `ecvt` library.
//!
//! Every fallible call returns an [`EcvtStatus`]; on failure the message is
//! available from [`ecvt_last_error`] on the same thread. Tables and
//! validation results are opaque handles released with their `_free`
//! function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ecvt::{
    anova, extrapolate_icc, fit_statistic, icc_from_anova, judge_fit, load_table, prob_chi2, q_from_icc,
    quant_f, run_validation, DataTable, Error, LoadOptions, PredictionKind, PredictionVector, ValidateConfig,
    ValidationOutput, Verdict,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EcvtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    DegenerateData = 5,
    Domain = 6,
    Resampling = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EcvtPredictionKind {
    /// Participant-level simulation; compared through `|r|`.
    Simulation = 0,
    /// One value per item; compared through `r^2`.
    Predictor = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EcvtVerdict {
    Underfit = -1,
    Consistent = 0,
    Overfit = 1,
}

/// Item x participant table.
pub struct EcvtTable(DataTable);

/// Result of a full validation run.
pub struct EcvtValidation(ValidationOutput);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct EcvtIcc {
    pub icc: f64,
    /// NaN when the residual mean square is zero.
    pub q_hat: f64,
    pub f_obs: f64,
    pub probability: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Options for [`ecvt_validate`]. Zero fields take the library defaults,
/// except `seed`, which is used as given.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct EcvtValidateOptions {
    pub seed: u64,
    pub replicates: usize,
    pub target_k: usize,
    pub alpha: f64,
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct EcvtValidationSummary {
    pub items: usize,
    pub participants: usize,
    pub missing_fraction: f64,
    pub icc: f64,
    /// NaN when undefined.
    pub q_anova: f64,
    pub r_resampled: f64,
    pub q_resampled: f64,
    pub chi2: f64,
    pub df: usize,
    pub p_value: f64,
    pub significant: bool,
    pub converged: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct EcvtSeriesRow {
    pub group_size: usize,
    pub r_mean: f64,
    pub r_sd: f64,
    pub predicted: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct EcvtFit {
    pub r: f64,
    pub statistic: f64,
    pub icc: f64,
    pub lower: f64,
    pub upper: f64,
    pub verdict: EcvtVerdict,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> EcvtStatus {
    match err {
        Error::Parse { .. } | Error::Ragged { .. } | Error::Csv(_) | Error::Json(_) => EcvtStatus::Parse,
        Error::Io(_) => EcvtStatus::Io,
        Error::DegenerateInput(_) | Error::DegenerateData(_) | Error::NoResidualDf(_) => {
            EcvtStatus::DegenerateData
        }
        Error::Domain { .. } => EcvtStatus::Domain,
        Error::RetryExhausted { .. } => EcvtStatus::Resampling,
        _ => EcvtStatus::InvalidArgument,
    }
}

struct Fail(EcvtStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(name: &str) -> Fail {
    Fail(EcvtStatus::NullPointer, format!("{name} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(EcvtStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EcvtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            EcvtStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EcvtStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(name))
}

fn check_out<T>(out: *mut T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    Ok(())
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Fail> {
    check_out(out)?;
    out.write(value);
    Ok(())
}

unsafe fn c_str<'a>(s: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| invalid(format!("{name} is not valid UTF-8")))
}

fn nan_if_none(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ecvt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ecvt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a table from `m * n` row-major values. `present` may be null for a
/// complete table; otherwise a zero byte marks a missing cell.
///
/// # Safety
/// `values` must point to `m * n` doubles and `present`, if not null, to
/// `m * n` bytes. `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecvt_table_from_values(
    m: usize,
    n: usize,
    values: *const f64,
    present: *const u8,
    out: *mut *mut EcvtTable,
) -> EcvtStatus {
    guard(|| {
        check_out(out)?;
        if values.is_null() {
            return Err(null("values"));
        }
        let len = m.checked_mul(n).ok_or_else(|| invalid("table size overflows"))?;
        let values = std::slice::from_raw_parts(values, len);
        let table = if present.is_null() {
            DataTable::complete(m, n, values)?
        } else {
            let mask = std::slice::from_raw_parts(present, len);
            let rows: Vec<Vec<Option<f64>>> = (0..m)
                .map(|i| {
                    (0..n)
                        .map(|j| (mask[i * n + j] != 0).then(|| values[i * n + j]))
                        .collect()
                })
                .collect();
            DataTable::from_rows(&rows)?
        };
        write_out(out, Box::into_raw(Box::new(EcvtTable(table))))
    })
}

/// Parses a delimited text table with the same autodetection as the CLI.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ecvt_table_parse(text: *const c_char, out: *mut *mut EcvtTable) -> EcvtStatus {
    guard(|| {
        check_out(out)?;
        let text = c_str(text, "text")?;
        let table = load_table(text.as_bytes(), &LoadOptions::default())?;
        write_out(out, Box::into_raw(Box::new(EcvtTable(table))))
    })
}

/// Loads a delimited text table from a file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ecvt_table_load(path: *const c_char, out: *mut *mut EcvtTable) -> EcvtStatus {
    guard(|| {
        check_out(out)?;
        let path = c_str(path, "path")?;
        let file = File::open(path).map_err(|e| Fail(EcvtStatus::Io, format!("{path}: {e}")))?;
        let table = load_table(file, &LoadOptions::default())?;
        write_out(out, Box::into_raw(Box::new(EcvtTable(table))))
    })
}

/// # Safety
/// `table` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ecvt_table_free(table: *mut EcvtTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Number of items (rows); 0 for a null handle.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ecvt_table_items(table: *const EcvtTable) -> usize {
    table.as_ref().map_or(0, |t| t.0.items())
}

/// Number of participants (columns); 0 for a null handle.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ecvt_table_participants(table: *const EcvtTable) -> usize {
    table.as_ref().map_or(0, |t| t.0.participants())
}

/// Number of missing cells; 0 for a null handle.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ecvt_table_missing(table: *const EcvtTable) -> usize {
    table.as_ref().map_or(0, |t| t.0.absent_count())
}

/// ANOVA ICC of the item means with a two-sided interval at `probability`.
///
/// # Safety
/// `table` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ecvt_icc(
    table: *const EcvtTable,
    probability: f64,
    out: *mut EcvtIcc,
) -> EcvtStatus {
    guard(|| {
        check_out(out)?;
        let t = as_ref(table, "table")?;
        let est = icc_from_anova(&anova(&t.0)?, &[probability])?;
        let ci = est.intervals[0];
        write_out(
            out,
            EcvtIcc {
                icc: est.icc,
                q_hat: nan_if_none(est.q_hat),
                f_obs: est.f_obs,
                probability,
                lower: ci.lower,
                upper: ci.upper,
            },
        )
    })
}

/// Full validation: ANOVA, resampling series and the chi-square test.
/// `options` may be null for defaults with seed 0.
///
/// # Safety
/// `table` must be a live handle, `options` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ecvt_validate(
    table: *const EcvtTable,
    options: *const EcvtValidateOptions,
    out: *mut *mut EcvtValidation,
) -> EcvtStatus {
    guard(|| {
        check_out(out)?;
        let t = as_ref(table, "table")?;
        let opts = options.as_ref().copied().unwrap_or_default();
        let mut cfg = ValidateConfig::new(opts.seed);
        if opts.replicates != 0 {
            cfg.replicates = opts.replicates;
        }
        if opts.target_k != 0 {
            cfg.target_k = opts.target_k;
        }
        if opts.alpha != 0.0 {
            cfg.alpha = opts.alpha;
        }
        let result = if opts.threads == 0 {
            run_validation(&t.0, &cfg)
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(opts.threads)
                .build()
                .map_err(|e| invalid(e.to_string()))?
                .install(|| run_validation(&t.0, &cfg))
        }?;
        write_out(out, Box::into_raw(Box::new(EcvtValidation(result))))
    })
}

/// # Safety
/// `v` must be null or a handle from [`ecvt_validate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ecvt_validation_free(v: *mut EcvtValidation) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}

/// # Safety
/// `v` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ecvt_validation_summary(
    v: *const EcvtValidation,
    out: *mut EcvtValidationSummary,
) -> EcvtStatus {
    guard(|| {
        check_out(out)?;
        let o = &as_ref(v, "validation")?.0;
        write_out(
            out,
            EcvtValidationSummary {
                items: o.items,
                participants: o.participants,
                missing_fraction: o.missing_fraction,
                icc: o.icc,
                q_anova: nan_if_none(o.q_anova),
                r_resampled: o.r_resampled,
                q_resampled: o.q_resampled,
                chi2: o.chi2,
                df: o.df,
                p_value: o.p_value,
                significant: o.significant,
                converged: o.converged,
            },
        )
    })
}

/// Number of group sizes in the resampling series; 0 for a null handle.
///
/// # Safety
/// `v` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ecvt_validation_series_len(v: *const EcvtValidation) -> usize {
    v.as_ref().map_or(0, |v| v.0.series.len())
}

/// # Safety
/// `v` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ecvt_validation_series_row(
    v: *const EcvtValidation,
    index: usize,
    out: *mut EcvtSeriesRow,
) -> EcvtStatus {
    guard(|| {
        check_out(out)?;
        let o = &as_ref(v, "validation")?.0;
        let row = o
            .series
            .get(index)
            .ok_or_else(|| invalid(format!("series index {index} out of range 0..{}", o.series.len())))?;
        write_out(
            out,
            EcvtSeriesRow {
                group_size: row.group_size,
                r_mean: row.r_mean,
                r_sd: row.r_sd,
                predicted: row.predicted,
            },
        )
    })
}

/// The full report as JSON, identical to the CLI's `--json` output. Release
/// with [`ecvt_string_free`].
///
/// # Safety
/// `v` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ecvt_validation_json(v: *const EcvtValidation, out: *mut *mut c_char) -> EcvtStatus {
    guard(|| {
        check_out(out)?;
        let o = &as_ref(v, "validation")?.0;
        let json = serde_json::to_string_pretty(o).map_err(Error::from)?;
        let s = CString::new(json).map_err(|e| invalid(e.to_string()))?;
        write_out(out, s.into_raw())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ecvt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Compares `len` item-level predictions with the table's item means and
/// judges them against the ICC interval at `1 - alpha`.
///
/// # Safety
/// `table` must be a live handle, `predictions` must point to `len` doubles
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecvt_fit(
    table: *const EcvtTable,
    predictions: *const f64,
    len: usize,
    kind: EcvtPredictionKind,
    alpha: f64,
    out: *mut EcvtFit,
) -> EcvtStatus {
    guard(|| {
        check_out(out)?;
        let t = as_ref(table, "table")?;
        if predictions.is_null() {
            return Err(null("predictions"));
        }
        if len != t.0.items() {
            return Err(invalid(format!("{len} predictions for {} items", t.0.items())));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("alpha = {alpha} must lie in (0, 1)")));
        }
        let kind = match kind {
            EcvtPredictionKind::Simulation => PredictionKind::Simulation,
            EcvtPredictionKind::Predictor => PredictionKind::Predictor,
        };
        let pred = PredictionVector::new(std::slice::from_raw_parts(predictions, len).to_vec(), kind)?;
        let est = icc_from_anova(&anova(&t.0)?, &[1.0 - alpha])?;
        let stat = fit_statistic(&ecvt::item_means(&t.0).means, &pred)?;
        let v = judge_fit(&stat, &est, alpha)?;
        write_out(
            out,
            EcvtFit {
                r: v.r,
                statistic: v.statistic,
                icc: v.icc,
                lower: v.ci.lower,
                upper: v.ci.upper,
                verdict: match v.verdict {
                    Verdict::Underfit => EcvtVerdict::Underfit,
                    Verdict::Consistent => EcvtVerdict::Consistent,
                    Verdict::Overfit => EcvtVerdict::Overfit,
                },
            },
        )
    })
}

/// Quantile of the F distribution.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecvt_quant_f(p: f64, d1: f64, d2: f64, out: *mut f64) -> EcvtStatus {
    guard(|| {
        check_out(out)?;
        write_out(out, quant_f(p, d1, d2)?)
    })
}

/// Chi-square CDF.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecvt_prob_chi2(x: f64, df: f64, out: *mut f64) -> EcvtStatus {
    guard(|| {
        check_out(out)?;
        write_out(out, prob_chi2(x, df)?)
    })
}

/// Expected correlation of two `n`-participant groups for variance ratio `q`.
#[no_mangle]
pub extern "C" fn ecvt_extrapolate_icc(q: f64, n: f64) -> f64 {
    extrapolate_icc(q, n)
}

/// Variance ratio implied by correlation `rho` at `n` participants.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecvt_q_from_icc(rho: f64, n: f64, out: *mut f64) -> EcvtStatus {
    guard(|| {
        check_out(out)?;
        write_out(out, q_from_icc(rho, n)?)
    })
}
