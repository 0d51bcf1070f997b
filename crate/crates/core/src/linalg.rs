//! Nested least-squares projections.

/// Orthonormalizes columns one at a time (modified Gram-Schmidt with one
/// re-orthogonalization pass) and records the projection of a fixed target
/// onto each prefix of the columns.
///
/// The fitted vector of the least-squares problem `min |G_k w - x|` is the
/// orthogonal projection of `x` onto the span of the first `k` columns, so
/// `fitted(k)` equals `G_k w` for the minimum-norm `w` whether or not `G_k`
/// has full column rank.
pub struct ProjectionLadder {
    len: usize,
    fitted: Vec<Vec<f64>>,
    residual_norms: Vec<f64>,
    dependent: Vec<usize>,
}

// A column whose component outside the previous span is below this fraction of
// its norm is treated as linearly dependent.
const DEPENDENCE_REL: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl ProjectionLadder {
    pub fn new<'a, I>(columns: I, target: &[f64]) -> Self
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let len = target.len();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut fitted = Vec::new();
        let mut residual_norms = Vec::new();
        let mut dependent = Vec::new();
        let mut current = vec![0.0; len];
        for (idx, col) in columns.into_iter().enumerate() {
            assert_eq!(col.len(), len, "column length mismatch");
            let mut v = col.to_vec();
            let norm0 = dot(&v, &v).sqrt();
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &v);
                    v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let norm = dot(&v, &v).sqrt();
            if norm0 == 0.0 || norm <= DEPENDENCE_REL * norm0 {
                dependent.push(idx + 1);
            } else {
                v.iter_mut().for_each(|x| *x /= norm);
                let c = dot(&v, target);
                current.iter_mut().zip(&v).for_each(|(f, q)| *f += c * q);
                basis.push(v);
            }
            let r: f64 = current
                .iter()
                .zip(target)
                .map(|(f, t)| (t - f) * (t - f))
                .sum::<f64>()
                .sqrt();
            residual_norms.push(r);
            fitted.push(current.clone());
        }
        ProjectionLadder {
            len,
            fitted,
            residual_norms,
            dependent,
        }
    }

    /// Number of columns consumed.
    pub fn depth(&self) -> usize {
        self.fitted.len()
    }

    pub fn dim(&self) -> usize {
        self.len
    }

    /// Projection of the target onto the first `k` columns (`1 <= k <= depth`).
    pub fn fitted(&self, k: usize) -> &[f64] {
        &self.fitted[k - 1]
    }

    pub fn residual_norm(&self, k: usize) -> f64 {
        self.residual_norms[k - 1]
    }

    /// 1-based positions of columns found linearly dependent on earlier ones.
    pub fn dependent_columns(&self) -> &[usize] {
        &self.dependent
    }
}
