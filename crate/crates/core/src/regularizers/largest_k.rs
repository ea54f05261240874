//! The largest-k norm `|||x|||_k` (sum of the k largest magnitudes) and an
//! incrementally maintained top-k index for its block subgradients.
//!
//! Ties in magnitude are broken toward the lower coordinate index, and
//! `sign(0)` is taken as `+1`, so the selected subgradient is a deterministic
//! function of `x`.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::error::{Error, Result};

pub(crate) fn check(k: usize, d: usize) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::InvalidParameter(format!(
            "largest-k norm needs 1 <= k <= d, got k = {k}, d = {d}"
        )));
    }
    Ok(())
}

/// Ordering key: larger magnitude first, then lower index.
#[derive(Clone, Copy, Debug)]
struct Rank {
    mag: f64,
    idx: usize,
}

impl PartialEq for Rank {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Rank {}

impl PartialOrd for Rank {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rank {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .mag
            .total_cmp(&self.mag)
            .then(self.idx.cmp(&other.idx))
    }
}

/// Indices of the k largest `|x_j|` under the tie rule, by full sort.
pub fn top_k_indices(x: &[f64], k: usize) -> Vec<usize> {
    let mut ranks: Vec<Rank> = x
        .iter()
        .enumerate()
        .map(|(idx, v)| Rank { mag: v.abs(), idx })
        .collect();
    ranks.sort_unstable();
    let mut top: Vec<usize> = ranks[..k.min(ranks.len())].iter().map(|r| r.idx).collect();
    top.sort_unstable();
    top
}

/// `lambda * |||x|||_k`.
pub fn largest_k_value(lambda: f64, k: usize, x: &[f64]) -> Result<f64> {
    check(k, x.len())?;
    Ok(lambda * top_k_indices(x, k).iter().map(|&j| x[j].abs()).sum::<f64>())
}

#[inline]
pub(crate) fn sign_plus(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Subgradient of `lambda * |||x|||_k` read from a tracker that is in step
/// with `x`: `lambda sign(x_j)` on the top set, zero elsewhere.
pub fn largest_k_subgrad(lambda: f64, k: usize, x: &[f64], tracker: &TopKTracker) -> Result<Vec<f64>> {
    check(k, x.len())?;
    if tracker.k() != k || tracker.dim() != x.len() {
        return Err(Error::InvalidParameter(format!(
            "tracker built for k = {}, d = {}",
            tracker.k(),
            tracker.dim()
        )));
    }
    tracker.check_consistent(x, 0..x.len())?;
    let mut v = vec![0.0; x.len()];
    tracker.block_subgrad_into(lambda, x, 0..x.len(), &mut v);
    Ok(v)
}

/// Membership index partitioning coordinates into the top-k magnitudes and
/// the rest. Each update costs `O(log d)`.
#[derive(Clone, Debug)]
pub struct TopKTracker {
    k: usize,
    mags: Vec<f64>,
    in_top: Vec<bool>,
    top: BTreeSet<Rank>,
    rest: BTreeSet<Rank>,
}

impl TopKTracker {
    pub fn new(k: usize, x: &[f64]) -> Result<Self> {
        check(k, x.len())?;
        let mut ranks: Vec<Rank> = x
            .iter()
            .enumerate()
            .map(|(idx, v)| Rank { mag: v.abs(), idx })
            .collect();
        ranks.sort_unstable();
        let mut in_top = vec![false; x.len()];
        for r in &ranks[..k] {
            in_top[r.idx] = true;
        }
        let rest = ranks.split_off(k);
        Ok(Self {
            k,
            mags: x.iter().map(|v| v.abs()).collect(),
            in_top,
            top: ranks.into_iter().collect(),
            rest: rest.into_iter().collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.mags.len()
    }

    #[inline]
    pub fn in_top(&self, j: usize) -> bool {
        self.in_top[j]
    }

    /// Sorted indices of the current top set.
    pub fn top_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.top.iter().map(|r| r.idx).collect();
        v.sort_unstable();
        v
    }

    /// `|||x|||_k` of the tracked vector, summed in index order.
    pub fn top_sum(&self) -> f64 {
        self.top_indices().iter().map(|&j| self.mags[j]).sum()
    }

    /// Records `x_j = new_value` and restores the membership invariant.
    pub fn update(&mut self, j: usize, new_value: f64) {
        let old = Rank {
            mag: self.mags[j],
            idx: j,
        };
        let new = Rank {
            mag: new_value.abs(),
            idx: j,
        };
        self.mags[j] = new.mag;
        if old.mag.to_bits() == new.mag.to_bits() {
            return;
        }
        if self.in_top[j] {
            self.top.remove(&old);
            // compare against the best outsider
            match self.rest.first().copied() {
                Some(best) if best < new => {
                    self.rest.remove(&best);
                    self.top.insert(best);
                    self.in_top[best.idx] = true;
                    self.rest.insert(new);
                    self.in_top[j] = false;
                }
                _ => {
                    self.top.insert(new);
                }
            }
        } else {
            self.rest.remove(&old);
            match self.top.last().copied() {
                Some(worst) if new < worst => {
                    self.top.remove(&worst);
                    self.rest.insert(worst);
                    self.in_top[worst.idx] = false;
                    self.top.insert(new);
                    self.in_top[j] = true;
                }
                _ => {
                    self.rest.insert(new);
                }
            }
        }
    }

    /// Errors when the tracked magnitudes on `range` differ from `x`.
    pub fn check_consistent(&self, x: &[f64], range: std::ops::Range<usize>) -> Result<()> {
        for j in range {
            if self.mags[j].to_bits() != x[j].abs().to_bits() {
                return Err(Error::TrackerDesync(j));
            }
        }
        Ok(())
    }

    /// Writes `lambda sign(x_j) [j in top]` for `j` in `range` into `out`.
    pub fn block_subgrad_into(&self, lambda: f64, x: &[f64], range: std::ops::Range<usize>, out: &mut [f64]) {
        for (o, j) in out.iter_mut().zip(range) {
            *o = if self.in_top[j] {
                lambda * sign_plus(x[j])
            } else {
                0.0
            };
        }
    }
}
