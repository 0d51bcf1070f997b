//! Judging item-level model predictions against the ICC interval.
//!
//! A simulation model (participant-level output averaged over participants)
//! is scored with `|r|`; a predictor (one value per item) with `r^2`. Either
//! score is expected to fall inside the ICC confidence interval: below it the
//! model under-fits, above it the model over-fits.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::anova::{ConfidenceInterval, IccEstimate};
use crate::error::{Error, Result};
use crate::synthetic::RegressionProblem;
use crate::table::{detect_delimiter, item_means, pearson_r, read_records, DataTable};

pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionKind {
    Simulation,
    Predictor,
}

impl PredictionKind {
    /// Exponent applied to `|r|`.
    pub fn power(self) -> i32 {
        match self {
            PredictionKind::Simulation => 1,
            PredictionKind::Predictor => 2,
        }
    }
}

impl FromStr for PredictionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "simulation" => Ok(PredictionKind::Simulation),
            "predictor" => Ok(PredictionKind::Predictor),
            other => Err(Error::InvalidParameter(format!(
                "unknown prediction kind {other:?}"
            ))),
        }
    }
}

impl fmt::Display for PredictionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PredictionKind::Simulation => "simulation",
            PredictionKind::Predictor => "predictor",
        })
    }
}

/// Model output aligned to the items of a table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictionVector {
    pub values: Vec<f64>,
    pub kind: PredictionKind,
}

impl PredictionVector {
    pub fn new(values: Vec<f64>, kind: PredictionKind) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "prediction {} is not finite",
                i + 1
            )));
        }
        Ok(PredictionVector { values, kind })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitStatistic {
    pub r: f64,
    /// `|r|^c`, `c = 1` for simulations and `c = 2` for predictors.
    pub statistic: f64,
    pub kind: PredictionKind,
}

pub fn fit_statistic(item_means: &[f64], pred: &PredictionVector) -> Result<FitStatistic> {
    let r = pearson_r(item_means, &pred.values)?;
    Ok(FitStatistic {
        r,
        statistic: r.abs().powi(pred.kind.power()),
        kind: pred.kind,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Underfit,
    Consistent,
    Overfit,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Underfit => "underfit",
            Verdict::Consistent => "consistent",
            Verdict::Overfit => "overfit",
        })
    }
}

/// Closed-interval comparison: a statistic on a bound is consistent.
pub fn classify(statistic: f64, ci: &ConfidenceInterval) -> Verdict {
    if statistic < ci.lower {
        Verdict::Underfit
    } else if statistic > ci.upper {
        Verdict::Overfit
    } else {
        Verdict::Consistent
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitVerdict {
    pub r: f64,
    pub statistic: f64,
    pub kind: PredictionKind,
    pub icc: f64,
    pub ci: ConfidenceInterval,
    pub verdict: Verdict,
    pub alpha: f64,
}

pub fn judge_fit(stat: &FitStatistic, icc_est: &IccEstimate, alpha: f64) -> Result<FitVerdict> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain("judge_fit", "alpha", alpha));
    }
    let ci = icc_est.interval(1.0 - alpha)?;
    Ok(FitVerdict {
        r: stat.r,
        statistic: stat.statistic,
        kind: stat.kind,
        icc: icc_est.icc,
        ci,
        verdict: classify(stat.statistic, &ci),
        alpha,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub k: usize,
    pub statistic: f64,
    pub verdict: Verdict,
}

/// Fits nested least-squares predictors with `k` parameters for every `k` in
/// `k_range` and judges each against `icc_est`.
pub fn complexity_sweep(
    problem: &RegressionProblem,
    k_range: RangeInclusive<usize>,
    icc_est: &IccEstimate,
    alpha: f64,
) -> Result<Vec<SweepPoint>> {
    if *k_range.start() < 2 || *k_range.end() > problem.k_max || k_range.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "complexity range {k_range:?} outside 2..={}",
            problem.k_max
        )));
    }
    let ci = icc_est.interval(1.0 - alpha)?;
    let ladder = problem.ladder();
    let means = item_means(&problem.table).means;
    k_range
        .into_par_iter()
        .map(|k| {
            let pred = PredictionVector::new(ladder.fitted(k).to_vec(), PredictionKind::Predictor)?;
            let stat = fit_statistic(&means, &pred)?;
            Ok(SweepPoint {
                k,
                statistic: stat.statistic,
                verdict: classify(stat.statistic, &ci),
            })
        })
        .collect()
}

/// Predictions read from text, optionally labelled.
#[derive(Clone, Debug, PartialEq)]
pub struct Predictions {
    pub labels: Option<Vec<String>>,
    pub values: Vec<f64>,
}

/// Reads one value per line, or `label<delim>value` pairs. A first line that
/// does not parse as a number is taken as a header.
pub fn load_predictions<R: Read>(mut source: R, delimiter: Option<u8>) -> Result<Predictions> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let delimiter = delimiter.unwrap_or_else(|| detect_delimiter(&text));
    let records = read_records(&text, delimiter)?;
    let parse = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
    let header = records
        .first()
        .is_some_and(|r| r.last().is_some_and(|f| parse(f).is_none()));
    let body = &records[usize::from(header)..];
    let width = body.first().map_or(0, Vec::len);
    if !(1..=2).contains(&width) {
        return Err(Error::InvalidParameter(format!(
            "predictions need 1 or 2 columns, found {width}"
        )));
    }
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (idx, rec) in body.iter().enumerate() {
        let line = idx + 1 + usize::from(header);
        if rec.len() != width {
            return Err(Error::Ragged {
                line,
                expected: width,
                found: rec.len(),
            });
        }
        let token = &rec[width - 1];
        values.push(parse(token).ok_or_else(|| Error::Parse {
            line,
            field: width,
            token: token.clone(),
        })?);
        if width == 2 {
            labels.push(rec[0].clone());
        }
    }
    Ok(Predictions {
        labels: (width == 2).then_some(labels),
        values,
    })
}

/// Orders predictions like the table's items: by label when both sides carry
/// labels, otherwise by position. Label sets must match exactly.
pub fn align_predictions(table: &DataTable, preds: &Predictions) -> Result<Vec<f64>> {
    let m = table.items();
    if preds.values.len() != m {
        return Err(Error::Alignment(format!(
            "{} predictions for {m} items",
            preds.values.len()
        )));
    }
    match (table.item_labels(), &preds.labels) {
        (Some(items), Some(labels)) => {
            let mut by_label = HashMap::with_capacity(m);
            for (l, v) in labels.iter().zip(&preds.values) {
                if by_label.insert(l.as_str(), *v).is_some() {
                    return Err(Error::Alignment(format!("duplicate prediction label {l:?}")));
                }
            }
            items
                .iter()
                .map(|l| {
                    by_label
                        .get(l.as_str())
                        .copied()
                        .ok_or_else(|| Error::Alignment(format!("no prediction for item {l:?}")))
                })
                .collect()
        }
        _ => Ok(preds.values.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ci(lower: f64, upper: f64) -> ConfidenceInterval {
        ConfidenceInterval {
            probability: 0.99,
            lower,
            upper,
        }
    }

    #[test]
    fn statistic_powers() {
        let x = [1.0, 3.0, 2.0, 5.0, 4.0];
        let same = PredictionVector::new(x.to_vec(), PredictionKind::Predictor).unwrap();
        assert!((fit_statistic(&x, &same).unwrap().statistic - 1.0).abs() < 1e-15);
        let flipped: Vec<f64> = x.iter().map(|v| -3.0 * v + 2.0).collect();
        let sim = PredictionVector::new(flipped, PredictionKind::Simulation).unwrap();
        let s = fit_statistic(&x, &sim).unwrap();
        assert!((s.statistic - 1.0).abs() < 1e-15);
        assert!(s.r < 0.0);
    }

    #[test]
    fn verdicts_against_interval() {
        let band = ci(0.9160, 0.9355);
        assert_eq!(classify(0.90, &band), Verdict::Underfit);
        assert_eq!(classify(0.95, &band), Verdict::Overfit);
        assert_eq!(classify(0.9261, &band), Verdict::Consistent);
        assert_eq!(classify(0.9160, &band), Verdict::Consistent);
        assert_eq!(classify(0.9355, &band), Verdict::Consistent);
    }

    #[test]
    fn degenerate_prediction() {
        let x = [1.0, 2.0, 3.0];
        let flat = PredictionVector::new(vec![2.0; 3], PredictionKind::Predictor).unwrap();
        assert!(matches!(fit_statistic(&x, &flat), Err(Error::DegenerateInput(_))));
        assert!(PredictionVector::new(vec![1.0, f64::NAN], PredictionKind::Predictor).is_err());
    }

    #[test]
    fn predictions_parse_and_align() {
        let t = DataTable::from_rows(&[
            vec![Some(1.0), Some(2.0)],
            vec![Some(3.0), Some(4.0)],
            vec![Some(5.0), Some(7.0)],
        ])
        .unwrap()
        .with_item_labels(vec!["a".into(), "b".into(), "c".into()])
        .unwrap();
        let p = load_predictions("word,pred\nc,30\na,10\nb,20\n".as_bytes(), None).unwrap();
        assert_eq!(align_predictions(&t, &p).unwrap(), vec![10.0, 20.0, 30.0]);

        let p = load_predictions("1.5\n2.5\n3.5\n".as_bytes(), None).unwrap();
        assert!(p.labels.is_none());
        assert_eq!(align_predictions(&t, &p).unwrap(), vec![1.5, 2.5, 3.5]);

        let p = load_predictions("a,1\nb,2\nz,3\n".as_bytes(), None).unwrap();
        assert!(matches!(align_predictions(&t, &p), Err(Error::Alignment(_))));
        let p = load_predictions("a,1\nb,2\n".as_bytes(), None).unwrap();
        assert!(matches!(align_predictions(&t, &p), Err(Error::Alignment(_))));
        assert!(load_predictions("a,1,2\n".as_bytes(), None).is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!(
            "Predictor".parse::<PredictionKind>().unwrap(),
            PredictionKind::Predictor
        );
        assert!("regression".parse::<PredictionKind>().is_err());
    }
}
