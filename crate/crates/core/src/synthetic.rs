//! Artificial data: the additive model, the participant-sensitivity model,
//! and nested regression test problems.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::ProjectionLadder;
use crate::model_fit::{PredictionKind, PredictionVector};
use crate::rng::{substream, Domain};
use crate::table::{item_means, DataTable};

/// Tolerance on the structural constraints of a generated regression problem.
pub const STRUCTURE_TOLERANCE: f64 = 1e-10;

fn normals(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_sd(v: &[f64]) -> f64 {
    let mu = mean(v);
    (v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
}

fn standardize(v: &mut [f64]) {
    let mu = mean(v);
    let sd = sample_sd(v);
    v.iter_mut().for_each(|x| *x = (*x - mu) / sd);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m < 2 || n < 2 {
        return Err(Error::TooSmall { rows: m, cols: n });
    }
    Ok(())
}

fn check_sd(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "{name} must be a finite value >= 0, got {v}"
        )));
    }
    Ok(())
}

/// `x_ij = mu + alpha_j + beta_i + eps_ij` with independent Gaussian effects.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdditiveSpec {
    pub m: usize,
    pub n: usize,
    pub mu: f64,
    pub sigma_alpha: f64,
    pub sigma_beta: f64,
    pub sigma_eps: f64,
    pub seed: u64,
}

impl AdditiveSpec {
    /// Unit noise and participant SD, item SD `sqrt(q)`.
    pub fn with_q(m: usize, n: usize, q: f64, seed: u64) -> Self {
        AdditiveSpec {
            m,
            n,
            mu: 0.0,
            sigma_alpha: 1.0,
            sigma_beta: q.sqrt(),
            sigma_eps: 1.0,
            seed,
        }
    }

    /// Population variance ratio `sigma_beta^2 / sigma_eps^2`.
    pub fn q(&self) -> f64 {
        (self.sigma_beta / self.sigma_eps).powi(2)
    }
}

pub fn gen_additive(spec: &AdditiveSpec) -> Result<DataTable> {
    check_dims(spec.m, spec.n)?;
    check_sd("sigma_alpha", spec.sigma_alpha)?;
    check_sd("sigma_beta", spec.sigma_beta)?;
    check_sd("sigma_eps", spec.sigma_eps)?;
    let (m, n) = (spec.m, spec.n);
    let mut rng = substream(spec.seed, Domain::Additive, 0, 0);
    let alpha = normals(&mut rng, n);
    let beta = normals(&mut rng, m);
    let mut values = Vec::with_capacity(m * n);
    for a in &alpha {
        for b in &beta {
            let e: f64 = rng.sample(StandardNormal);
            values.push(spec.mu + spec.sigma_alpha * a + spec.sigma_beta * b + spec.sigma_eps * e);
        }
    }
    DataTable::from_column_major(m, n, values, vec![true; m * n])
}

/// `x_ij = mu + alpha_j + gamma_j * lambda_i + eps_ij`, where `lambda` is a
/// standard normal item effect and `gamma_j` a per-participant sensitivity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SensitivitySpec {
    pub m: usize,
    pub n: usize,
    pub mu: f64,
    pub sigma_alpha: f64,
    pub gamma_mean: f64,
    pub sigma_gamma: f64,
    pub sigma_eps: f64,
    pub seed: u64,
}

impl SensitivitySpec {
    /// Unit noise and participant SD, with `q = gamma_mean^2` and
    /// `u = sigma_gamma^2`.
    pub fn with_q_u(m: usize, n: usize, q: f64, u: f64, seed: u64) -> Self {
        SensitivitySpec {
            m,
            n,
            mu: 0.0,
            sigma_alpha: 1.0,
            gamma_mean: q.sqrt(),
            sigma_gamma: u.sqrt(),
            sigma_eps: 1.0,
            seed,
        }
    }

    pub fn q(&self) -> f64 {
        (self.gamma_mean / self.sigma_eps).powi(2)
    }

    pub fn u(&self) -> f64 {
        (self.sigma_gamma / self.sigma_eps).powi(2)
    }
}

pub fn gen_sensitivity(spec: &SensitivitySpec) -> Result<DataTable> {
    check_dims(spec.m, spec.n)?;
    check_sd("sigma_alpha", spec.sigma_alpha)?;
    check_sd("sigma_gamma", spec.sigma_gamma)?;
    check_sd("sigma_eps", spec.sigma_eps)?;
    if !spec.gamma_mean.is_finite() {
        return Err(Error::InvalidParameter("gamma_mean must be finite".into()));
    }
    let (m, n) = (spec.m, spec.n);
    let mut rng = substream(spec.seed, Domain::Sensitivity, 0, 0);
    let alpha = normals(&mut rng, n);
    let lambda = normals(&mut rng, m);
    let gamma = normals(&mut rng, n);
    let mut values = Vec::with_capacity(m * n);
    for (a, g) in alpha.iter().zip(&gamma) {
        let g = spec.gamma_mean + spec.sigma_gamma * g;
        for l in &lambda {
            let e: f64 = rng.sample(StandardNormal);
            values.push(spec.mu + spec.sigma_alpha * a + g * l + spec.sigma_eps * e);
        }
    }
    DataTable::from_column_major(m, n, values, vec![true; m * n])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegressionSpec {
    pub m: usize,
    pub n: usize,
    pub k0: usize,
    pub k_max: usize,
    pub sigma_eps: f64,
    pub seed: u64,
}

impl RegressionSpec {
    /// Noise SD chosen for an approximate variance ratio `q`; item effects
    /// are standardized to unit SD.
    pub fn with_q(m: usize, n: usize, k0: usize, k_max: usize, q: f64, seed: u64) -> Self {
        RegressionSpec {
            m,
            n,
            k0,
            k_max,
            sigma_eps: 1.0 / q.sqrt(),
            seed,
        }
    }
}

/// A data table generated from a known `k0`-column basis, plus everything
/// needed to build nested least-squares predictors of its item means.
#[derive(Clone, Debug)]
pub struct RegressionProblem {
    pub m: usize,
    pub n: usize,
    pub k0: usize,
    pub k_max: usize,
    pub sigma_eps: f64,
    pub mu: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// `k0` orthonormal columns; the first is constant.
    pub basis: Vec<Vec<f64>>,
    /// `n` noise columns, each orthogonal to `beta`.
    pub noise: Vec<Vec<f64>>,
    pub table: DataTable,
}

/// Orthonormalizes `cols` in place against each other and against `fixed`.
fn orthonormalize(cols: &mut [Vec<f64>], fixed: &[Vec<f64>]) -> Result<()> {
    for idx in 0..cols.len() {
        let (done, rest) = cols.split_at_mut(idx);
        let v = &mut rest[0];
        for _ in 0..2 {
            for q in fixed.iter().chain(done.iter()) {
                let c = dot(q, v);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = dot(v, v).sqrt();
        if !(norm > 1e-8) {
            return Err(Error::DegenerateData("random basis lost rank".into()));
        }
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(())
}

pub fn gen_regression_problem(spec: &RegressionSpec) -> Result<RegressionProblem> {
    let RegressionSpec {
        m,
        n,
        k0,
        k_max,
        sigma_eps,
        seed,
    } = *spec;
    if !(1 < k0 && k0 < k_max && k_max <= k0 + n && k0 + n < m) {
        return Err(Error::InvalidParameter(format!(
            "need 1 < k0 < k_max <= k0 + n < m, got k0={k0} k_max={k_max} n={n} m={m}"
        )));
    }
    if !(sigma_eps > 0.0 && sigma_eps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma_eps must be positive, got {sigma_eps}"
        )));
    }
    let mut rng = substream(seed, Domain::Regression, 0, 0);
    let mu = rng.random_range(0.0..1000.0);
    let mut alpha = normals(&mut rng, n);
    standardize(&mut alpha);
    let mut beta = normals(&mut rng, m);
    standardize(&mut beta);
    let beta_sq = dot(&beta, &beta);

    let noise: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut c = normals(&mut rng, m);
            let proj = dot(&c, &beta) / beta_sq;
            c.iter_mut().zip(&beta).for_each(|(x, b)| *x -= proj * b);
            let s = sigma_eps / sample_sd(&c);
            c.iter_mut().for_each(|x| *x *= s);
            c
        })
        .collect();

    // Basis: constant column, then k0 - 1 orthonormal random columns
    // reflected so that their sum points along beta.
    let constant = vec![1.0 / (m as f64).sqrt(); m];
    let mut cols: Vec<Vec<f64>> = (1..k0).map(|_| normals(&mut rng, m)).collect();
    orthonormalize(&mut cols, std::slice::from_ref(&constant))?;
    let mut sum = vec![0.0; m];
    for c in &cols {
        sum.iter_mut().zip(c).for_each(|(s, x)| *s += x);
    }
    let sum_norm = dot(&sum, &sum).sqrt();
    let beta_norm = beta_sq.sqrt();
    let w: Vec<f64> = sum
        .iter()
        .zip(&beta)
        .map(|(s, b)| s / sum_norm - b / beta_norm)
        .collect();
    let w_sq = dot(&w, &w);
    if w_sq > 0.0 {
        for c in cols.iter_mut() {
            let f = 2.0 * dot(&w, c) / w_sq;
            c.iter_mut().zip(&w).for_each(|(x, wi)| *x -= f * wi);
        }
    }
    let mut basis = Vec::with_capacity(k0);
    basis.push(constant);
    basis.extend(cols);

    let mut values = Vec::with_capacity(m * n);
    for (a, e) in alpha.iter().zip(&noise) {
        for (b, eps) in beta.iter().zip(e) {
            values.push(mu + a + b + eps);
        }
    }
    let table = DataTable::from_column_major(m, n, values, vec![true; m * n])?;
    let problem = RegressionProblem {
        m,
        n,
        k0,
        k_max,
        sigma_eps,
        mu,
        alpha,
        beta,
        basis,
        noise,
        table,
    };
    problem.check_structure()?;
    Ok(problem)
}

/// Maximum violations of the structural constraints of a problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StructureReport {
    /// `max |H^T H - I|`.
    pub orthonormality: f64,
    /// `max_i |sqrt((m-1)/(k0-1)) * sum_{j>=2} h_ij - beta_i|`.
    pub sum_constraint: f64,
    /// `max_j |E_j . beta| / (|beta| |E_j|)`.
    pub noise_alignment: f64,
    /// `|h_1 - 1/sqrt(m)|` over the first column.
    pub constant_column: f64,
}

impl RegressionProblem {
    pub fn structure(&self) -> StructureReport {
        let k0 = self.basis.len();
        let mut orth: f64 = 0.0;
        for a in 0..k0 {
            for b in a..k0 {
                let target = if a == b { 1.0 } else { 0.0 };
                orth = orth.max((dot(&self.basis[a], &self.basis[b]) - target).abs());
            }
        }
        let scale = ((self.m as f64 - 1.0) / (k0 as f64 - 1.0)).sqrt();
        let sum_constraint = (0..self.m)
            .map(|i| {
                let s: f64 = self.basis[1..].iter().map(|c| c[i]).sum();
                (scale * s - self.beta[i]).abs()
            })
            .fold(0.0, f64::max);
        let beta_norm = dot(&self.beta, &self.beta).sqrt();
        let noise_alignment = self
            .noise
            .iter()
            .map(|c| dot(c, &self.beta).abs() / (beta_norm * dot(c, c).sqrt()))
            .fold(0.0, f64::max);
        let c0 = 1.0 / (self.m as f64).sqrt();
        let constant_column = self.basis[0].iter().map(|h| (h - c0).abs()).fold(0.0, f64::max);
        StructureReport {
            orthonormality: orth,
            sum_constraint,
            noise_alignment,
            constant_column,
        }
    }

    pub fn check_structure(&self) -> Result<()> {
        let s = self.structure();
        let worst = s
            .orthonormality
            .max(s.sum_constraint)
            .max(s.noise_alignment)
            .max(s.constant_column);
        if worst > STRUCTURE_TOLERANCE {
            return Err(Error::DegenerateData(format!(
                "generated regression problem violates its constraints: {s:?}"
            )));
        }
        Ok(())
    }

    /// The candidate columns in predictor order: the basis, then noise columns.
    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.basis
            .iter()
            .chain(&self.noise)
            .take(self.k_max)
            .map(Vec::as_slice)
    }

    /// Least-squares projections of the item means onto every prefix of
    /// [`columns`](Self::columns).
    pub fn ladder(&self) -> ProjectionLadder {
        let x = item_means(&self.table).means;
        ProjectionLadder::new(self.columns(), &x)
    }
}

/// Least-squares predictor with `k` free parameters: the item means
/// projected onto the first `k` columns of the basis followed by noise
/// columns. Returns warnings about dependent columns alongside.
pub fn build_predictor(p: &RegressionProblem, k: usize) -> Result<(PredictionVector, Vec<String>)> {
    if !(2..=p.k_max).contains(&k) {
        return Err(Error::InvalidParameter(format!(
            "predictor size {k} outside 2..={}",
            p.k_max
        )));
    }
    let x = item_means(&p.table).means;
    let ladder = ProjectionLadder::new(p.columns().take(k), &x);
    let warnings = ladder
        .dependent_columns()
        .iter()
        .map(|c| format!("column {c} of G_{k} is linearly dependent; minimum-norm solution used"))
        .collect();
    let pred = PredictionVector::new(ladder.fitted(k).to_vec(), PredictionKind::Predictor)?;
    Ok((pred, warnings))
}
