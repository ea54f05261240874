use std::ops::Range;

use super::largest_k::{self, TopKTracker};
use super::scad;
use crate::error::{check_len, Error, Result};

/// Shape of the convex function `h` that is subtracted from the objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HKind {
    Zero,
    /// Concave half of SCAD, see [`super::scad_h_value`].
    Scad { lambda: f64, theta: f64 },
    /// `lambda |||x|||_k`.
    LargestK { lambda: f64, k: usize },
    /// `(mu/2) ||x||^2`, used to move weak convexity of `f` into `h`.
    QuadraticShift { mu: f64 },
}

/// The subtracted convex part `h`, multiplied by `scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcaveH {
    pub kind: HKind,
    pub scale: f64,
}

impl ConcaveH {
    pub fn zero() -> Self {
        Self {
            kind: HKind::Zero,
            scale: 1.0,
        }
    }

    pub fn scad(lambda: f64, theta: f64) -> Result<Self> {
        Self::new(HKind::Scad { lambda, theta }, 1.0)
    }

    pub fn largest_k(lambda: f64, k: usize) -> Result<Self> {
        Self::new(HKind::LargestK { lambda, k }, 1.0)
    }

    pub fn quadratic_shift(mu: f64) -> Result<Self> {
        Self::new(HKind::QuadraticShift { mu }, 1.0)
    }

    pub fn new(kind: HKind, scale: f64) -> Result<Self> {
        match kind {
            HKind::Zero => {}
            HKind::Scad { lambda, theta } => scad::check(lambda, theta)?,
            HKind::LargestK { lambda, k } => {
                if k == 0 || !(lambda >= 0.0 && lambda.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "largest-k needs k >= 1 and lambda >= 0, got k = {k}, lambda = {lambda}"
                    )));
                }
            }
            HKind::QuadraticShift { mu } => {
                if !(mu >= 0.0 && mu.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "quadratic shift needs mu >= 0, got {mu}"
                    )));
                }
            }
        }
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "h scale must be nonnegative, got {scale}"
            )));
        }
        Ok(Self { kind, scale })
    }

    pub fn scaled(self, scale: f64) -> Result<Self> {
        Self::new(self.kind, self.scale * scale)
    }

    /// Checks parameters that depend on the dimension.
    pub fn check_dim(&self, d: usize) -> Result<()> {
        if let HKind::LargestK { k, .. } = self.kind {
            largest_k::check(k, d)?;
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.scale == 0.0
            || match self.kind {
                HKind::Zero => true,
                HKind::Scad { .. } => false,
                HKind::LargestK { lambda, .. } => lambda == 0.0,
                HKind::QuadraticShift { mu } => mu == 0.0,
            }
    }

    /// True when `h` is continuously differentiable.
    pub fn is_smooth(&self) -> bool {
        !matches!(self.kind, HKind::LargestK { .. }) || self.is_zero()
    }

    /// Lipschitz constant of `grad h` for smooth `h`.
    pub fn gradient_lipschitz(&self) -> Option<f64> {
        match self.kind {
            HKind::Zero => Some(0.0),
            HKind::Scad { theta, .. } => Some(self.scale / (theta - 1.0)),
            HKind::QuadraticShift { mu } => Some(self.scale * mu),
            HKind::LargestK { .. } => self.is_zero().then_some(0.0),
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let raw = match self.kind {
            HKind::Zero => return Ok(0.0),
            HKind::Scad { lambda, theta } => x
                .iter()
                .map(|&v| scad::value_unchecked(lambda, theta, v))
                .sum::<f64>(),
            HKind::LargestK { lambda, k } => largest_k::largest_k_value(lambda, k, x)?,
            HKind::QuadraticShift { mu } => 0.5 * mu * x.iter().map(|v| v * v).sum::<f64>(),
        };
        Ok(self.scale * raw)
    }

    /// The canonical subgradient used throughout (ties to lower index,
    /// `sign(0) = +1` for the largest-k norm).
    pub fn subgrad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let state = HState::new(*self, x)?;
        Ok(state.subgrad(x))
    }

    /// Tracking state for incremental subgradients at `x`.
    pub fn state(&self, x: &[f64]) -> Result<HState> {
        HState::new(*self, x)
    }
}

/// `h` together with whatever it needs to produce block subgradients
/// cheaply while a solver moves one block at a time.
#[derive(Clone, Debug)]
pub struct HState {
    h: ConcaveH,
    tracker: Option<TopKTracker>,
}

impl HState {
    pub fn new(h: ConcaveH, x: &[f64]) -> Result<Self> {
        h.check_dim(x.len())?;
        let tracker = match h.kind {
            HKind::LargestK { k, .. } => Some(TopKTracker::new(k, x)?),
            _ => None,
        };
        Ok(Self { h, tracker })
    }

    pub fn h(&self) -> &ConcaveH {
        &self.h
    }

    /// Writes the subgradient entries for `range` into `out`.
    pub fn block_subgrad_into(&self, x: &[f64], range: Range<usize>, out: &mut [f64]) {
        let c = self.h.scale;
        match self.h.kind {
            HKind::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            HKind::Scad { lambda, theta } => {
                for (o, j) in out.iter_mut().zip(range) {
                    *o = c * scad::derivative_unchecked(lambda, theta, x[j]);
                }
            }
            HKind::LargestK { lambda, .. } => {
                let t = self.tracker.as_ref().expect("largest-k state carries a tracker");
                t.block_subgrad_into(c * lambda, x, range, out);
            }
            HKind::QuadraticShift { mu } => {
                for (o, j) in out.iter_mut().zip(range) {
                    *o = c * mu * x[j];
                }
            }
        }
    }

    pub fn subgrad(&self, x: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; x.len()];
        self.block_subgrad_into(x, 0..x.len(), &mut v);
        v
    }

    /// Records that coordinate `j` now holds `value`.
    #[inline]
    pub fn update(&mut self, j: usize, value: f64) {
        if let Some(t) = self.tracker.as_mut() {
            t.update(j, value);
        }
    }

    /// Records every coordinate of `range`.
    pub fn sync(&mut self, x: &[f64], range: Range<usize>) {
        if let Some(t) = self.tracker.as_mut() {
            for j in range {
                t.update(j, x[j]);
            }
        }
    }

    pub fn check_consistent(&self, x: &[f64]) -> Result<()> {
        if let Some(t) = self.tracker.as_ref() {
            check_len(t.dim(), x.len())?;
            t.check_consistent(x, 0..x.len())?;
        }
        Ok(())
    }

    /// `h(x)`; for the largest-k norm this reads the tracker in `O(k log k)`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        match (self.h.kind, self.tracker.as_ref()) {
            (HKind::LargestK { lambda, .. }, Some(t)) => Ok(self.h.scale * (lambda * t.top_sum())),
            _ => self.h.value(x),
        }
    }
}
