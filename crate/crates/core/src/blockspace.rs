//! Block partitions of `R^d` and the Lipschitz-weighted norms built on them.
//!
//! A [`BlockPartition`] splits the coordinates `0..d` into `m` contiguous,
//! nonempty blocks and carries one Lipschitz constant `L_i` per block. For an
//! exponent `s` in `[0, 1]` the weighted norm and its dual are
//!
//! ```text
//! ||x||_[s]   = sqrt( sum_i L_i^s  ||x_(i)||^2 )
//! ||y||_[s],* = sqrt( sum_i L_i^-s ||y_(i)||^2 )
//! ```
//!
//! and `T_s = sum_i L_i^s`.

use std::ops::Range;

use crate::error::{check_len, Error, Result};

/// A fixed partition of `0..d` into `m` contiguous blocks with per-block
/// Lipschitz constants.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockPartition {
    offsets: Vec<usize>,
    lipschitz: Vec<f64>,
}

impl BlockPartition {
    /// Splits `d` coordinates into `m` blocks whose sizes differ by at most
    /// one; the first `d mod m` blocks get the extra coordinate. All Lipschitz
    /// constants start at `1.0`.
    pub fn uniform(d: usize, m: usize) -> Result<Self> {
        if m == 0 || m > d {
            return Err(Error::InvalidPartition(format!(
                "need 1 <= m <= d, got m = {m}, d = {d}"
            )));
        }
        let base = d / m;
        let extra = d % m;
        let mut offsets = Vec::with_capacity(m + 1);
        offsets.push(0);
        for i in 0..m {
            let len = base + usize::from(i < extra);
            offsets.push(offsets[i] + len);
        }
        Ok(Self {
            offsets,
            lipschitz: vec![1.0; m],
        })
    }

    /// Builds a partition from explicit block boundaries.
    pub fn from_offsets(offsets: Vec<usize>, lipschitz: Vec<f64>) -> Result<Self> {
        if offsets.len() < 2 || offsets[0] != 0 {
            return Err(Error::InvalidPartition(
                "offsets must start at 0 and delimit at least one block".into(),
            ));
        }
        if offsets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPartition(
                "offsets must be strictly increasing".into(),
            ));
        }
        let part = Self {
            offsets,
            lipschitz: Vec::new(),
        };
        part.with_lipschitz(lipschitz)
    }

    /// Returns a copy carrying different Lipschitz constants.
    pub fn with_lipschitz(&self, lipschitz: Vec<f64>) -> Result<Self> {
        check_len(self.num_blocks(), lipschitz.len())?;
        if let Some(bad) = lipschitz.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidPartition(format!(
                "Lipschitz constants must be positive and finite, got {bad}"
            )));
        }
        Ok(Self {
            offsets: self.offsets.clone(),
            lipschitz,
        })
    }

    /// Same blocks, constants transformed by `f(i, L_i)`.
    pub fn map_lipschitz(&self, f: impl Fn(usize, f64) -> f64) -> Result<Self> {
        let l = self
            .lipschitz
            .iter()
            .enumerate()
            .map(|(i, &li)| f(i, li))
            .collect();
        self.with_lipschitz(l)
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn num_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Coordinate range of block `i`.
    #[inline]
    pub fn range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    #[inline]
    pub fn block_len(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn lipschitz(&self) -> &[f64] {
        &self.lipschitz
    }

    pub fn l_max(&self) -> f64 {
        self.lipschitz.iter().copied().fold(f64::MIN, f64::max)
    }

    pub fn l_min(&self) -> f64 {
        self.lipschitz.iter().copied().fold(f64::MAX, f64::min)
    }

    /// `T_s = sum_i L_i^s`.
    pub fn t_s(&self, s: f64) -> f64 {
        self.lipschitz.iter().map(|l| l.powf(s)).sum()
    }

    /// Block index containing coordinate `j`.
    pub fn block_of(&self, j: usize) -> usize {
        self.offsets.partition_point(|&o| o <= j) - 1
    }

    /// `sum_i L_i^s ||x_(i)||^2`.
    pub fn weighted_norm_sq(&self, x: &[f64], s: f64) -> Result<f64> {
        check_len(self.dim(), x.len())?;
        Ok(self.weighted_sq_unchecked(x, s))
    }

    /// `||x||_[s]`.
    pub fn weighted_norm(&self, x: &[f64], s: f64) -> Result<f64> {
        self.weighted_norm_sq(x, s).map(f64::sqrt)
    }

    /// `||y||_[s],*`.
    pub fn dual_weighted_norm(&self, y: &[f64], s: f64) -> Result<f64> {
        check_len(self.dim(), y.len())?;
        Ok(self.weighted_sq_unchecked(y, -s).sqrt())
    }

    /// `||y||_[s],*^2`.
    pub fn dual_weighted_norm_sq(&self, y: &[f64], s: f64) -> Result<f64> {
        check_len(self.dim(), y.len())?;
        Ok(self.weighted_sq_unchecked(y, -s))
    }

    /// `||x - y||_[s]^2` without allocating the difference.
    pub fn weighted_dist_sq(&self, x: &[f64], y: &[f64], s: f64) -> Result<f64> {
        check_len(self.dim(), x.len())?;
        check_len(self.dim(), y.len())?;
        let mut total = 0.0;
        for i in 0..self.num_blocks() {
            let r = self.range(i);
            let sq: f64 = x[r.clone()]
                .iter()
                .zip(&y[r])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            total += weight(self.lipschitz[i], s) * sq;
        }
        Ok(total)
    }

    fn weighted_sq_unchecked(&self, x: &[f64], s: f64) -> f64 {
        (0..self.num_blocks())
            .map(|i| {
                let sq: f64 = x[self.range(i)].iter().map(|v| v * v).sum();
                weight(self.lipschitz[i], s) * sq
            })
            .sum()
    }
}

#[inline]
fn weight(l: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else if s == 1.0 {
        l
    } else if s == -1.0 {
        1.0 / l
    } else {
        l.powf(s)
    }
}
