//! Two-way ANOVA with missing cells and the ICC derived from it.
//!
//! The decomposition uses row and column totals over present cells only
//! (unbalanced-totals formulas, no imputation). Values are centred on the
//! grand mean before accumulating, which leaves every sum of squares
//! unchanged algebraically and keeps the subtraction `sum x^2 - t^2 / N`
//! well conditioned for data with a large offset such as response times.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::quant_f;
use crate::table::DataTable;

/// Default confidence levels of the ICC intervals.
pub const DEFAULT_CONF_PROBS: [f64; 3] = [0.95, 0.99, 0.999];

// Residual SS below this fraction of the total SS is treated as exactly zero.
const RESIDUAL_ZERO_REL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnovaResult {
    /// Items (rows).
    pub m: usize,
    /// Participants (columns); the `n` of the ICC formulas.
    pub n: usize,
    /// Present cells.
    pub n_total: usize,
    pub ss_total: f64,
    pub ssi: f64,
    pub ssp: f64,
    pub sse: f64,
    pub dfi: f64,
    pub dfp: f64,
    pub dfe: f64,
    pub msi: f64,
    pub msp: f64,
    pub mse: f64,
}

impl AnovaResult {
    /// True when the residual mean square is zero (perfectly additive data).
    pub fn is_degenerate(&self) -> bool {
        self.mse == 0.0
    }
}

pub fn anova(t: &DataTable) -> Result<AnovaResult> {
    let m = t.items();
    let n = t.participants();
    let big_n = t.present_count();
    let dfi = m as i64 - 1;
    let dfp = n as i64 - 1;
    let dfe = big_n as i64 - 1 - dfi - dfp;
    if dfe <= 0 {
        return Err(Error::NoResidualDf(dfe));
    }

    let mut grand = 0.0;
    for j in 0..n {
        for (v, p) in t.column(j).iter().zip(t.column_mask(j)) {
            if *p {
                grand += v;
            }
        }
    }
    let shift = grand / big_n as f64;

    let mut ti = vec![0.0; m];
    let mut ni = vec![0usize; m];
    let mut tj = vec![0.0; n];
    let mut nj = vec![0usize; n];
    let mut sx2 = 0.0;
    for j in 0..n {
        for (i, (v, p)) in t.column(j).iter().zip(t.column_mask(j)).enumerate() {
            if *p {
                let x = v - shift;
                ti[i] += x;
                ni[i] += 1;
                tj[j] += x;
                nj[j] += 1;
                sx2 += x * x;
            }
        }
    }
    let total: f64 = ti.iter().sum();
    let correction = total * total / big_n as f64;
    let ss_total = (sx2 - correction).max(0.0);
    let ssi = (ti.iter().zip(&ni).map(|(t, &c)| t * t / c as f64).sum::<f64>() - correction).max(0.0);
    let ssp = (tj.iter().zip(&nj).map(|(t, &c)| t * t / c as f64).sum::<f64>() - correction).max(0.0);
    let mut sse = ss_total - ssi - ssp;
    if sse.abs() <= RESIDUAL_ZERO_REL * ss_total || ss_total == 0.0 {
        sse = 0.0;
    }

    let (dfi, dfp, dfe) = (dfi as f64, dfp as f64, dfe as f64);
    Ok(AnovaResult {
        m,
        n,
        n_total: big_n,
        ss_total,
        ssi,
        ssp,
        sse,
        dfi,
        dfp,
        dfe,
        msi: ssi / dfi,
        msp: ssp / dfp,
        mse: sse / dfe,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub probability: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IccEstimate {
    /// Estimated item-to-noise variance ratio; `None` when the residual is zero.
    pub q_hat: Option<f64>,
    pub icc: f64,
    pub f_obs: f64,
    /// Participant count the ICC refers to.
    pub n: usize,
    pub dfi: f64,
    pub dfe: f64,
    pub intervals: Vec<ConfidenceInterval>,
    pub warnings: Vec<String>,
}

impl IccEstimate {
    /// The interval at `probability`, computed on demand if it was not requested
    /// up front.
    pub fn interval(&self, probability: f64) -> Result<ConfidenceInterval> {
        if let Some(ci) = self
            .intervals
            .iter()
            .find(|ci| (ci.probability - probability).abs() < 1e-12)
        {
            return Ok(*ci);
        }
        confidence_interval(self.f_obs, self.dfi, self.dfe, probability)
    }
}

/// ICC confidence interval at level `probability` around the observed F ratio.
///
/// The upper bound uses the F quantile with the degrees of freedom swapped.
pub fn confidence_interval(f_obs: f64, dfi: f64, dfe: f64, probability: f64) -> Result<ConfidenceInterval> {
    if !(probability > 0.0 && probability < 1.0) {
        return Err(Error::domain("confidence_interval", "probability", probability));
    }
    let tail = 1.0 - (1.0 - probability) / 2.0;
    if f_obs.is_infinite() {
        return Ok(ConfidenceInterval {
            probability,
            lower: 1.0,
            upper: 1.0,
        });
    }
    let q1 = quant_f(tail, dfi, dfe)?;
    let q2 = quant_f(tail, dfe, dfi)?;
    Ok(ConfidenceInterval {
        probability,
        lower: 1.0 - q1 / f_obs,
        upper: 1.0 - 1.0 / (f_obs * q2),
    })
}

pub fn icc_from_anova(a: &AnovaResult, conf_probs: &[f64]) -> Result<IccEstimate> {
    let n = a.n as f64;
    let mut warnings = Vec::new();
    if a.is_degenerate() {
        if a.msi == 0.0 {
            return Err(Error::DegenerateData(
                "no item variance and no residual variance (constant table)".into(),
            ));
        }
        warnings
            .push("residual mean square is zero; the data are perfectly additive and the ICC is 1".into());
        let intervals = conf_probs
            .iter()
            .map(|&p| confidence_interval(f64::INFINITY, a.dfi, a.dfe, p))
            .collect::<Result<_>>()?;
        return Ok(IccEstimate {
            q_hat: None,
            icc: 1.0,
            f_obs: f64::INFINITY,
            n: a.n,
            dfi: a.dfi,
            dfe: a.dfe,
            intervals,
            warnings,
        });
    }

    let vi = ((a.msi - a.mse) / n).max(0.0);
    let q_hat = vi / a.mse;
    let icc = vi / (vi + a.mse / n);
    let f_obs = a.msi / a.mse;
    if a.msi < a.mse {
        warnings.push("item mean square below residual mean square; ICC clamped to 0".into());
    }
    let intervals = conf_probs
        .iter()
        .map(|&p| confidence_interval(f_obs, a.dfi, a.dfe, p))
        .collect::<Result<_>>()?;
    Ok(IccEstimate {
        q_hat: Some(q_hat),
        icc,
        f_obs,
        n: a.n,
        dfi: a.dfi,
        dfe: a.dfe,
        intervals,
        warnings,
    })
}

/// Expected correlation between item means of two independent groups of `n`
/// participants, given the variance ratio `q`.
pub fn extrapolate_icc(q: f64, n: f64) -> f64 {
    n * q / (n * q + 1.0)
}

/// Variance ratio implied by a correlation `rho` at group size `n`.
pub fn q_from_icc(rho: f64, n: f64) -> Result<f64> {
    if !(rho < 1.0) {
        return Err(Error::domain("q_from_icc", "rho", rho));
    }
    if !(n > 0.0) {
        return Err(Error::domain("q_from_icc", "n", n));
    }
    Ok(rho / (n * (1.0 - rho)))
}

/// Participants needed to reach correlation `rho` at variance ratio `q`.
/// Not rounded.
pub fn participants_needed(q: f64, rho: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::domain("participants_needed", "q", q));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::domain("participants_needed", "rho", rho));
    }
    Ok(rho / (q * (1.0 - rho)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DataTable {
        DataTable::complete(2, 2, &[1.0, 2.0, 2.0, 5.0]).unwrap()
    }

    #[test]
    fn hand_computed_two_by_two() {
        // means: rows 1.5, 3.5; cols 1.5, 3.5; grand 2.5
        // ssi = 2*(1+1) = 4, ssp = 4, total = 2.25+0.25+0.25+6.25 = 9, sse = 1
        let a = anova(&small()).unwrap();
        assert!((a.ssi - 4.0).abs() < 1e-12);
        assert!((a.ssp - 4.0).abs() < 1e-12);
        assert!((a.sse - 1.0).abs() < 1e-12);
        assert_eq!((a.dfi, a.dfp, a.dfe), (1.0, 1.0, 1.0));
        assert!((a.msi - 4.0).abs() < 1e-12);
        assert!((a.mse - 1.0).abs() < 1e-12);

        let est = icc_from_anova(&a, &[0.95]).unwrap();
        assert!((est.q_hat.unwrap() - 1.5).abs() < 1e-12);
        assert!((est.icc - 0.75).abs() < 1e-12);
        assert!((est.f_obs - 4.0).abs() < 1e-12);
    }

    #[test]
    fn constant_table() {
        let t = DataTable::complete(3, 3, &[4.0; 9]).unwrap();
        let a = anova(&t).unwrap();
        assert_eq!((a.ss_total, a.ssi, a.ssp, a.sse), (0.0, 0.0, 0.0, 0.0));
        assert!(matches!(
            icc_from_anova(&a, &[0.95]),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn perfectly_additive_reports_icc_one() {
        let t = DataTable::complete(3, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 10.0, 11.0, 12.0]).unwrap();
        let a = anova(&t).unwrap();
        assert!(a.is_degenerate());
        let est = icc_from_anova(&a, &[0.99]).unwrap();
        assert_eq!(est.icc, 1.0);
        assert!(est.q_hat.is_none());
        assert!(!est.warnings.is_empty());
    }

    #[test]
    fn no_item_effect() {
        // msi == mse exactly: rows differ, but the row effect is as large as noise
        let a = AnovaResult {
            m: 10,
            n: 5,
            n_total: 50,
            ss_total: 0.0,
            ssi: 9.0,
            ssp: 0.0,
            sse: 36.0,
            dfi: 9.0,
            dfp: 4.0,
            dfe: 36.0,
            msi: 1.0,
            msp: 0.0,
            mse: 1.0,
        };
        let est = icc_from_anova(&a, &DEFAULT_CONF_PROBS).unwrap();
        assert_eq!(est.icc, 0.0);
        assert_eq!(est.q_hat, Some(0.0));
        for ci in &est.intervals {
            assert!(ci.lower < 0.0 && 0.0 < ci.upper, "{ci:?}");
        }
    }

    #[test]
    fn too_small_for_residual() {
        let t = DataTable::from_rows(&[vec![Some(1.0), None], vec![Some(3.0), Some(4.0)]]).unwrap();
        assert!(matches!(anova(&t), Err(Error::NoResidualDf(0))));
    }

    #[test]
    fn extrapolation_formulas() {
        assert_eq!(extrapolate_icc(0.0, 12.0), 0.0);
        assert!((extrapolate_icc(1.0 / 16.0, 16.0) - 0.5).abs() < 1e-15);
        assert!((extrapolate_icc(0.1333, 25.0) - 0.769).abs() < 5e-4);
        assert!((q_from_icc(0.5, 16.0).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        assert_eq!(q_from_icc(0.0, 3.0).unwrap(), 0.0);
        assert!(q_from_icc(1.0, 3.0).is_err());
        assert!((q_from_icc(0.9261, 94.0).unwrap() - 0.1333).abs() < 1e-3);
        assert!((participants_needed(1.0 / 16.0, 0.5).unwrap() - 16.0).abs() < 1e-12);
        assert!((participants_needed(0.1333, 0.769).unwrap() - 25.0).abs() < 0.05);
        assert!(participants_needed(0.0, 0.5).is_err());
    }

    #[test]
    fn interval_on_demand_matches_precomputed() {
        let t = DataTable::complete(
            4,
            3,
            &[1.0, 2.0, 1.5, 4.0, 4.5, 5.0, 2.0, 2.5, 1.0, 7.0, 6.0, 7.5],
        )
        .unwrap();
        let est = icc_from_anova(&anova(&t).unwrap(), &[0.99]).unwrap();
        let stored = est.interval(0.99).unwrap();
        let fresh = confidence_interval(est.f_obs, est.dfi, est.dfe, 0.99).unwrap();
        assert_eq!(stored, fresh);
        let other = est.interval(0.9).unwrap();
        assert!(other.lower > stored.lower && other.upper < stored.upper);
    }
}
