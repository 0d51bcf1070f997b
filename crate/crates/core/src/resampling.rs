//! Permutation resampling of split-group correlations.
//!
//! For a group size `g`, each replicate draws a random permutation of the
//! participants, takes the first `g` as one group and the next `g` as the
//! other, and correlates the two vectors of per-item means. Replicate `t` of
//! size index `k` draws from its own substream `(seed, k, t)`, so the series is
//! the same whatever the thread count.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{substream, Domain};
use crate::table::{pearson_r, DataTable};

pub const DEFAULT_REPLICATES: usize = 500;
pub const DEFAULT_TARGET_K: usize = 12;
/// Attempts per replicate to find a split where every item has a present
/// cell in both groups.
pub const MAX_SPLIT_ATTEMPTS: usize = 10_000;

/// Equally spaced group sizes `g * step + offset`, `g = 1..=count`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GroupPlan {
    pub offset: usize,
    pub step: usize,
    pub count: usize,
}

impl GroupPlan {
    pub fn sizes(&self) -> Vec<usize> {
        (1..=self.count).map(|g| g * self.step + self.offset).collect()
    }

    pub fn max_size(&self) -> usize {
        self.count * self.step + self.offset
    }
}

/// Chooses about `target_k` equally spaced group sizes ending at `n / 2`.
///
/// Among steps `s = 1..=n/2`, picks the one minimizing
/// `offset + s * |k - target_k|` with `k = (n/2) / s`; the first minimum wins.
pub fn plan_groups(n: usize, target_k: usize) -> Result<GroupPlan> {
    if n < 4 {
        return Err(Error::TooFewParticipants(n));
    }
    if target_k == 0 {
        return Err(Error::InvalidParameter(
            "target group count must be positive".into(),
        ));
    }
    let max_size = n / 2;
    if max_size <= target_k {
        return Ok(GroupPlan {
            offset: 0,
            step: 1,
            count: max_size,
        });
    }
    let mut best = GroupPlan {
        offset: 0,
        step: 1,
        count: max_size,
    };
    let mut best_err = usize::MAX;
    for step in 1..=max_size {
        let count = max_size / step;
        let offset = max_size - step * count;
        let err = offset + step * count.abs_diff(target_k);
        if err < best_err {
            best = GroupPlan { offset, step, count };
            best_err = err;
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesEntry {
    pub group_size: usize,
    pub r_mean: f64,
    pub r_sd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResamplingSeries {
    pub entries: Vec<SeriesEntry>,
    pub replicates: usize,
}

struct Scratch {
    order: Vec<usize>,
    sum1: Vec<f64>,
    sum2: Vec<f64>,
    cnt1: Vec<u32>,
    cnt2: Vec<u32>,
}

impl Scratch {
    fn new(m: usize, n: usize) -> Self {
        Scratch {
            order: (0..n).collect(),
            sum1: vec![0.0; m],
            sum2: vec![0.0; m],
            cnt1: vec![0; m],
            cnt2: vec![0; m],
        }
    }
}

fn accumulate(t: &DataTable, cols: &[usize], sum: &mut [f64], cnt: &mut [u32]) {
    sum.fill(0.0);
    for &j in cols {
        for (s, v) in sum.iter_mut().zip(t.column(j)) {
            *s += v;
        }
    }
    if !t.is_complete() {
        cnt.fill(0);
        for &j in cols {
            for (c, p) in cnt.iter_mut().zip(t.column_mask(j)) {
                *c += u32::from(*p);
            }
        }
    }
}

fn to_means(sum: &mut [f64], cnt: &[u32], complete: bool, size: usize) {
    if complete {
        let inv = 1.0 / size as f64;
        sum.iter_mut().for_each(|s| *s *= inv);
    } else {
        for (s, c) in sum.iter_mut().zip(cnt) {
            *s /= f64::from(*c);
        }
    }
}

/// One split-half correlation at group size `size`.
fn replicate(
    t: &DataTable,
    size: usize,
    size_index: usize,
    rep: usize,
    seed: u64,
    scratch: &mut Scratch,
) -> Result<f64> {
    let n = t.participants();
    let complete = t.is_complete();
    let mut rng = substream(seed, Domain::Resampling, size_index as u64, rep as u64);
    for (j, o) in scratch.order.iter_mut().enumerate() {
        *o = j;
    }
    let mut uncovered = 0;
    for _ in 0..MAX_SPLIT_ATTEMPTS {
        // partial Fisher-Yates: the first 2 * size positions are a uniform draw
        for i in 0..2 * size {
            let k = rng.random_range(i..n);
            scratch.order.swap(i, k);
        }
        let (g1, rest) = scratch.order.split_at(size);
        let g2 = &rest[..size];
        accumulate(t, g1, &mut scratch.sum1, &mut scratch.cnt1);
        accumulate(t, g2, &mut scratch.sum2, &mut scratch.cnt2);
        if !complete {
            if let Some(i) = scratch
                .cnt1
                .iter()
                .zip(&scratch.cnt2)
                .position(|(a, b)| *a == 0 || *b == 0)
            {
                uncovered = i;
                continue;
            }
        }
        to_means(&mut scratch.sum1, &scratch.cnt1, complete, size);
        to_means(&mut scratch.sum2, &scratch.cnt2, complete, size);
        return pearson_r(&scratch.sum1, &scratch.sum2);
    }
    Err(Error::RetryExhausted {
        group_size: size,
        item: uncovered + 1,
        attempts: MAX_SPLIT_ATTEMPTS,
    })
}

/// Runs `replicates` permutation splits for every group size in `plan`.
///
/// Work is spread over the current rayon pool.
pub fn resample_series(
    t: &DataTable,
    plan: &GroupPlan,
    replicates: usize,
    seed: u64,
) -> Result<ResamplingSeries> {
    if replicates < 2 {
        return Err(Error::InvalidParameter(format!(
            "at least 2 replicates are required, got {replicates}"
        )));
    }
    let sizes = plan.sizes();
    if plan.count == 0 || 2 * plan.max_size() > t.participants() {
        return Err(Error::InvalidParameter(format!(
            "group sizes up to {} do not fit twice into {} participants",
            plan.max_size(),
            t.participants()
        )));
    }
    let (m, n) = (t.items(), t.participants());
    let tasks = sizes.len() * replicates;
    let results: Vec<Result<f64>> = (0..tasks)
        .into_par_iter()
        .map_init(
            || Scratch::new(m, n),
            |scratch, task| {
                let k = task / replicates;
                let rep = task % replicates;
                replicate(t, sizes[k], k, rep, seed, scratch)
            },
        )
        .collect();
    // first failure in task order names the smallest failing group size
    let rs: Vec<f64> = results.into_iter().collect::<Result<_>>()?;

    let entries = sizes
        .iter()
        .zip(rs.chunks(replicates))
        .map(|(&group_size, chunk)| {
            let len = chunk.len() as f64;
            let mean = chunk.iter().sum::<f64>() / len;
            let var = chunk.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (len - 1.0);
            SeriesEntry {
                group_size,
                r_mean: mean,
                r_sd: var.sqrt(),
            }
        })
        .collect();
    Ok(ResamplingSeries { entries, replicates })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plans_match_reference_selection() {
        assert_eq!(
            plan_groups(24, 12).unwrap(),
            GroupPlan {
                offset: 0,
                step: 1,
                count: 12
            }
        );
        assert_eq!(plan_groups(24, 12).unwrap().sizes(), (1..=12).collect::<Vec<_>>());
        let p = plan_groups(94, 12).unwrap();
        assert_eq!(
            p,
            GroupPlan {
                offset: 3,
                step: 4,
                count: 11
            }
        );
        assert_eq!(p.sizes().first(), Some(&7));
        assert_eq!(p.max_size(), 47);
        let p = plan_groups(100, 12).unwrap();
        assert_eq!(
            p,
            GroupPlan {
                offset: 2,
                step: 4,
                count: 12
            }
        );
        assert_eq!((p.sizes()[0], p.max_size()), (6, 50));
        assert_eq!(plan_groups(140, 12).unwrap().count, 14);
        assert_eq!(
            plan_groups(120, 12).unwrap(),
            GroupPlan {
                offset: 0,
                step: 5,
                count: 12
            }
        );
        assert!(matches!(plan_groups(3, 12), Err(Error::TooFewParticipants(3))));
    }

    #[test]
    fn noise_free_table_correlates_perfectly() {
        let (m, n) = (6, 8);
        let beta = [1.0, -2.0, 0.5, 3.0, -1.0, 0.0];
        let mut vals = Vec::new();
        for b in beta {
            for j in 0..n {
                vals.push(10.0 + b + j as f64);
            }
        }
        let t = DataTable::complete(m, n, &vals).unwrap();
        let s = resample_series(&t, &plan_groups(n, 12).unwrap(), 20, 3).unwrap();
        for e in &s.entries {
            assert!((e.r_mean - 1.0).abs() < 1e-12);
            assert!(e.r_sd < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let t = DataTable::complete(
            3,
            4,
            &[1.0, 2.0, 3.0, 4.0, 2.0, 1.0, 4.0, 3.0, 0.0, 5.0, 1.0, 1.0],
        )
        .unwrap();
        let plan = GroupPlan {
            offset: 0,
            step: 3,
            count: 1,
        };
        assert!(resample_series(&t, &plan, 10, 1).is_err());
        assert!(resample_series(&t, &plan_groups(4, 12).unwrap(), 1, 1).is_err());
    }

    #[test]
    fn uncoverable_item_exhausts_retries() {
        // item 1 is present only for participant 1, so a size-2 split can never cover it twice
        let rows = vec![
            vec![Some(1.0), None, None, None],
            vec![Some(1.0), Some(2.0), Some(3.0), Some(5.0)],
            vec![Some(2.0), Some(1.0), Some(7.0), Some(3.0)],
        ];
        let t = DataTable::from_rows(&rows).unwrap();
        let plan = GroupPlan {
            offset: 0,
            step: 1,
            count: 2,
        };
        let err = resample_series(&t, &plan, 2, 1).unwrap_err();
        assert!(matches!(err, Error::RetryExhausted { item: 1, .. }), "{err}");
    }
}
