use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::{DataMatrix, LossKind};
use crate::blockspace::BlockPartition;
use crate::error::{check_len, Error, Result};

static NEXT_ORACLE_ID: AtomicU64 = AtomicU64::new(1);

/// Smallest block Lipschitz constant handed out; all-zero blocks are floored
/// to this and reported in [`LipschitzReport::floored`].
pub const LIPSCHITZ_FLOOR: f64 = 1e-12;

/// Relative drift allowed between a cached product and a fresh `A x`.
pub const CACHE_TOLERANCE: f64 = 1e-10;

/// Smooth part `f(x) = (1/n) sum_r loss(a_r^T x, b_r) + (ridge/2) ||x||^2`.
///
/// A negative `ridge` makes `f` weakly convex; this is how the weakly convex
/// test problems are assembled.
#[derive(Clone, Debug)]
pub struct SmoothOracle {
    loss: LossKind,
    matrix: Arc<DataMatrix>,
    targets: Vec<f64>,
    ridge: f64,
    id: u64,
}

/// An iterate together with its cached product `A x`.
///
/// Points are created by [`SmoothOracle::point`] and mutated only through
/// the oracle, which keeps the cache in step with `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct CachedPoint {
    x: Vec<f64>,
    ax: Vec<f64>,
    owner: u64,
}

impl CachedPoint {
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn ax(&self) -> &[f64] {
        &self.ax
    }

    pub fn into_x(self) -> Vec<f64> {
        self.x
    }

    /// `self <- a * self + b * other`, applied to both `x` and `A x`.
    pub fn lincomb_assign(&mut self, a: f64, b: f64, other: &CachedPoint) {
        debug_assert_eq!(self.owner, other.owner);
        for (s, o) in self.x.iter_mut().zip(&other.x) {
            *s = a * *s + b * o;
        }
        for (s, o) in self.ax.iter_mut().zip(&other.ax) {
            *s = a * *s + b * o;
        }
    }

    /// `self <- a * p + b * q`.
    pub fn set_lincomb(&mut self, a: f64, p: &CachedPoint, b: f64, q: &CachedPoint) {
        for ((s, u), v) in self.x.iter_mut().zip(&p.x).zip(&q.x) {
            *s = a * u + b * v;
        }
        for ((s, u), v) in self.ax.iter_mut().zip(&p.ax).zip(&q.ax) {
            *s = a * u + b * v;
        }
        self.owner = p.owner;
    }

    /// `self <- a * p + b * q + c * r`.
    pub fn set_lincomb3(
        &mut self,
        a: f64,
        p: &CachedPoint,
        b: f64,
        q: &CachedPoint,
        c: f64,
        r: &CachedPoint,
    ) {
        for (((s, u), v), w) in self.x.iter_mut().zip(&p.x).zip(&q.x).zip(&r.x) {
            *s = a * u + b * v + c * w;
        }
        for (((s, u), v), w) in self.ax.iter_mut().zip(&p.ax).zip(&q.ax).zip(&r.ax) {
            *s = a * u + b * v + c * w;
        }
        self.owner = p.owner;
    }
}

/// Outcome of [`SmoothOracle::block_lipschitz`].
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzReport {
    pub partition: BlockPartition,
    /// Blocks whose columns are all zero and whose constant was floored.
    pub floored: Vec<usize>,
}

impl SmoothOracle {
    pub fn new(loss: LossKind, matrix: Arc<DataMatrix>, targets: Vec<f64>) -> Result<Self> {
        check_len(matrix.nrows(), targets.len())?;
        if let LossKind::Huber { delta } = loss {
            LossKind::huber(delta)?;
        }
        if matches!(loss, LossKind::Logistic) && targets.iter().any(|&b| b != 1.0 && b != -1.0) {
            return Err(Error::InvalidParameter(
                "logistic loss needs labels in {-1, +1}".into(),
            ));
        }
        if matrix.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            loss,
            matrix,
            targets,
            ridge: 0.0,
            id: NEXT_ORACLE_ID.fetch_add(1, Ordering::Relaxed),
        })
    }

    /// Adds `(ridge/2) ||x||^2` to `f`.
    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = ridge;
        self
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn matrix(&self) -> &Arc<DataMatrix> {
        &self.matrix
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    /// Builds a cached point at `x`.
    pub fn point(&self, x: Vec<f64>) -> Result<CachedPoint> {
        check_len(self.dim(), x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow("iterate"));
        }
        let mut ax = vec![0.0; self.nrows()];
        self.matrix.mul_vec(&x, &mut ax);
        Ok(CachedPoint {
            x,
            ax,
            owner: self.id,
        })
    }

    pub fn zero_point(&self) -> CachedPoint {
        CachedPoint {
            x: vec![0.0; self.dim()],
            ax: vec![0.0; self.nrows()],
            owner: self.id,
        }
    }

    /// `f(x)`, computed from scratch.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let p = self.point(x.to_vec())?;
        self.value_at(&p)
    }

    /// `f` at a cached point, `O(n + d)`.
    pub fn value_at(&self, p: &CachedPoint) -> Result<f64> {
        self.check_owner(p)?;
        let n = self.nrows() as f64;
        let data: f64 = p
            .ax
            .iter()
            .zip(&self.targets)
            .map(|(&z, &b)| self.loss.value(z, b))
            .sum::<f64>()
            / n;
        let reg = if self.ridge != 0.0 {
            0.5 * self.ridge * p.x.iter().map(|v| v * v).sum::<f64>()
        } else {
            0.0
        };
        let v = data + reg;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NumericOverflow("smooth loss value"))
        }
    }

    /// `grad f(x)`, computed from scratch.
    pub fn full_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.point(x.to_vec())?;
        self.full_gradient_at(&p)
    }

    /// `grad f` at a cached point; identical arithmetic to concatenating
    /// [`Self::block_gradient`] over any partition.
    pub fn full_gradient_at(&self, p: &CachedPoint) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.gradient_into(p, 0..self.dim(), &mut out)?;
        Ok(out)
    }

    /// `grad_i f(x)` in `O(nnz of the block's columns)` using the cache.
    pub fn block_gradient(
        &self,
        p: &CachedPoint,
        part: &BlockPartition,
        i: usize,
    ) -> Result<Vec<f64>> {
        let r = part.range(i);
        let mut out = vec![0.0; r.len()];
        self.gradient_into(p, r, &mut out)?;
        Ok(out)
    }

    /// Writes the gradient entries for coordinates `cols` into `out`.
    pub fn gradient_into(
        &self,
        p: &CachedPoint,
        cols: std::ops::Range<usize>,
        out: &mut [f64],
    ) -> Result<()> {
        self.check_owner(p)?;
        check_len(cols.len(), out.len())?;
        let inv_n = 1.0 / self.nrows() as f64;
        for (o, j) in out.iter_mut().zip(cols) {
            let (rows, vals) = self.matrix.column(j);
            let mut acc = 0.0;
            for (&r, &a) in rows.iter().zip(vals) {
                acc += a * self.loss.derivative(p.ax[r], self.targets[r]);
            }
            *o = acc * inv_n + self.ridge * p.x[j];
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow("gradient"));
        }
        Ok(())
    }

    /// `x_(i) += delta`, updating the cache through the block's columns only.
    pub fn apply_block_step(
        &self,
        p: &mut CachedPoint,
        part: &BlockPartition,
        i: usize,
        delta: &[f64],
    ) -> Result<()> {
        self.check_owner(p)?;
        let r = part.range(i);
        check_len(r.len(), delta.len())?;
        for (j, &dj) in r.zip(delta) {
            if dj != 0.0 {
                p.x[j] += dj;
                self.matrix.axpy_col(j, dj, &mut p.ax);
            }
        }
        Ok(())
    }

    /// Like [`Self::apply_block_step`] on the coordinates `cols`, returning
    /// `f(new) - f(old)` summed over `rows`, the rows the block touches
    /// (see [`Self::block_rows`]).
    pub fn apply_step_with_delta(
        &self,
        p: &mut CachedPoint,
        cols: std::ops::Range<usize>,
        delta: &[f64],
        rows: &[usize],
        scratch: &mut Vec<f64>,
    ) -> Result<f64> {
        self.check_owner(p)?;
        check_len(cols.len(), delta.len())?;
        scratch.clear();
        scratch.extend(rows.iter().map(|&r| p.ax[r]));
        let mut reg = 0.0;
        for (j, &dj) in cols.zip(delta) {
            if dj != 0.0 {
                let old = p.x[j];
                p.x[j] += dj;
                reg += p.x[j] * p.x[j] - old * old;
                self.matrix.axpy_col(j, dj, &mut p.ax);
            }
        }
        let mut data = 0.0;
        for (&r, &old) in rows.iter().zip(scratch.iter()) {
            let b = self.targets[r];
            data += self.loss.value(p.ax[r], b) - self.loss.value(old, b);
        }
        let d = data / self.nrows() as f64 + 0.5 * self.ridge * reg;
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::NumericOverflow("block step"))
        }
    }

    /// Sorted rows with a nonzero entry in each block's columns.
    pub fn block_rows(&self, part: &BlockPartition) -> Vec<Vec<usize>> {
        let mut seen = vec![usize::MAX; self.nrows()];
        (0..part.num_blocks())
            .map(|i| {
                let mut rows = Vec::new();
                for j in part.range(i) {
                    for &r in self.matrix.column(j).0 {
                        if seen[r] != i {
                            seen[r] = i;
                            rows.push(r);
                        }
                    }
                }
                rows.sort_unstable();
                rows
            })
            .collect()
    }

    /// Sets coordinate `j` to `value`, keeping the cache in step.
    pub fn set_coordinate(&self, p: &mut CachedPoint, j: usize, value: f64) {
        let dj = value - p.x[j];
        if dj != 0.0 {
            p.x[j] = value;
            self.matrix.axpy_col(j, dj, &mut p.ax);
        }
    }

    /// Recomputes `A x` and compares it against the cache.
    pub fn verify(&self, p: &CachedPoint) -> Result<()> {
        self.check_owner(p)?;
        let fresh = self.point(p.x.clone())?;
        let diff: f64 = fresh
            .ax
            .iter()
            .zip(&p.ax)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = fresh.ax.iter().map(|a| a * a).sum::<f64>().sqrt();
        let rel_err = diff / scale.max(1e-300);
        if diff == 0.0 || rel_err <= CACHE_TOLERANCE {
            Ok(())
        } else {
            Err(Error::CacheInvalid { rel_err })
        }
    }

    /// Recomputes the cache from scratch.
    pub fn refresh(&self, p: &mut CachedPoint) {
        self.matrix.mul_vec(&p.x, &mut p.ax);
    }

    /// Upper bounds on the block Lipschitz constants of `grad f`.
    ///
    /// `L_i = c * lambda_max(A_I^T A_I) / n + |ridge|` where `c` is the loss
    /// curvature bound (`1`, `1/4`, `1/delta`). Single columns are exact;
    /// wider blocks use [`DataMatrix::block_spectral_bound`].
    pub fn block_lipschitz(&self, part: &BlockPartition) -> Result<LipschitzReport> {
        check_len(self.dim(), part.dim())?;
        let factor = self.loss.curvature_bound() / self.nrows() as f64;
        let mut floored = Vec::new();
        let l = (0..part.num_blocks())
            .map(|i| {
                let li = factor * self.matrix.block_spectral_bound(part.range(i)) + self.ridge.abs();
                if li <= LIPSCHITZ_FLOOR {
                    floored.push(i);
                    LIPSCHITZ_FLOOR
                } else {
                    li
                }
            })
            .collect();
        Ok(LipschitzReport {
            partition: part.with_lipschitz(l)?,
            floored,
        })
    }

    /// Global Lipschitz constant, computed as the one-block special case of
    /// [`Self::block_lipschitz`].
    pub fn global_lipschitz(&self) -> f64 {
        let whole = BlockPartition::uniform(self.dim(), 1).expect("d >= 1");
        self.block_lipschitz(&whole)
            .map(|r| r.partition.lipschitz()[0])
            .unwrap_or(LIPSCHITZ_FLOOR)
    }

    /// Fraction of one full data pass spent by a gradient over `cols`.
    pub fn pass_fraction(&self, cols: std::ops::Range<usize>) -> f64 {
        let nnz = self.matrix.nnz().max(1) as f64;
        cols.map(|j| self.matrix.col_nnz(j)).sum::<usize>() as f64 / nnz
    }

    fn check_owner(&self, p: &CachedPoint) -> Result<()> {
        if p.owner != self.id || p.x.len() != self.dim() || p.ax.len() != self.nrows() {
            return Err(Error::CacheInvalid {
                rel_err: f64::INFINITY,
            });
        }
        Ok(())
    }
}
