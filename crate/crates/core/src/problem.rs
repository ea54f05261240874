use std::ops::Range;

use crate::blockspace::BlockPartition;
use crate::error::{check_len, Error, Result};
use crate::oracles::{CachedPoint, SmoothOracle};
use crate::regularizers::{ConcaveH, HState, SeparablePhi};

/// `F(x) = f(x) + phi(x) - h(x)` over a block partition whose Lipschitz
/// constants describe `f`.
#[derive(Clone, Debug)]
pub struct CompositeProblem {
    pub oracle: SmoothOracle,
    pub phi: SeparablePhi,
    pub h: ConcaveH,
    part: BlockPartition,
    /// `f + (mu/2)||x||^2` is convex for this `mu`; zero for convex `f`.
    pub weak_convexity_mu: f64,
    /// Blocks whose Lipschitz constant was floored (all-zero columns).
    pub floored_blocks: Vec<usize>,
    global_l: f64,
    block_rows: Vec<Vec<usize>>,
    block_passes: Vec<f64>,
}

impl CompositeProblem {
    /// Builds the problem over `m` near-equal blocks, estimating the block
    /// and global Lipschitz constants from the data.
    pub fn new(oracle: SmoothOracle, phi: SeparablePhi, h: ConcaveH, m: usize) -> Result<Self> {
        let part = BlockPartition::uniform(oracle.dim(), m)?;
        let report = oracle.block_lipschitz(&part)?;
        let mut p = Self::with_partition(oracle, phi, h, report.partition)?;
        p.floored_blocks = report.floored;
        Ok(p)
    }

    /// Uses the caller's partition and constants as given.
    pub fn with_partition(
        oracle: SmoothOracle,
        phi: SeparablePhi,
        h: ConcaveH,
        part: BlockPartition,
    ) -> Result<Self> {
        check_len(oracle.dim(), part.dim())?;
        h.check_dim(part.dim())?;
        let global_l = oracle.global_lipschitz();
        let block_rows = oracle.block_rows(&part);
        let block_passes = (0..part.num_blocks())
            .map(|i| oracle.pass_fraction(part.range(i)))
            .collect();
        let weak_convexity_mu = (-oracle.ridge()).max(0.0);
        Ok(Self {
            oracle,
            phi,
            h,
            part,
            weak_convexity_mu,
            floored_blocks: Vec::new(),
            global_l,
            block_rows,
            block_passes,
        })
    }

    pub fn with_weak_convexity(mut self, mu: f64) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weak convexity modulus must be nonnegative, got {mu}"
            )));
        }
        self.weak_convexity_mu = mu;
        Ok(self)
    }

    /// Overrides the global Lipschitz constant used by full-gradient methods.
    pub fn with_global_lipschitz(mut self, l: f64) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidParameter(format!("global Lipschitz constant {l}")));
        }
        self.global_l = l;
        Ok(self)
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.part
    }

    pub fn dim(&self) -> usize {
        self.part.dim()
    }

    pub fn num_blocks(&self) -> usize {
        self.part.num_blocks()
    }

    /// Lipschitz constant of the full gradient.
    pub fn global_lipschitz(&self) -> f64 {
        self.global_l
    }

    pub(crate) fn block_rows(&self, i: usize) -> &[usize] {
        &self.block_rows[i]
    }

    /// Fraction of a data pass spent by one gradient of block `i`.
    pub fn block_pass(&self, i: usize) -> f64 {
        self.block_passes[i]
    }

    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        let p = self.oracle.point(x.to_vec())?;
        self.objective_at(&p)
    }

    pub fn objective_at(&self, p: &CachedPoint) -> Result<f64> {
        let v = self.oracle.value_at(p)? + self.phi.value(p.x()) - self.h.value(p.x())?;
        finite(v, "objective")
    }

    /// Objective reading `h` from a tracking state.
    pub(crate) fn objective_tracked(&self, p: &CachedPoint, hs: &HState) -> Result<f64> {
        let v = self.oracle.value_at(p)? + self.phi.value(p.x()) - hs.value(p.x())?;
        finite(v, "objective")
    }

    pub fn h_subgrad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.h.subgrad(x)
    }

    /// `phi - h` restricted to the coordinates `cols`, for separable `h`.
    pub(crate) fn separable_block_value(&self, x: &[f64], cols: Range<usize>) -> Result<f64> {
        let xs = &x[cols];
        Ok(self.phi.value(xs) - self.h.value(xs)?)
    }
}

pub(crate) fn finite(v: f64, what: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NumericOverflow(what))
    }
}
