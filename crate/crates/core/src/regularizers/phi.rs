use crate::error::{Error, Result};

/// Coordinate-wise convex penalty shape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhiKind {
    Zero,
    /// `lambda |x|`.
    L1 { lambda: f64 },
    /// `l1 |x| + (l2 / 2) x^2`.
    ElasticNet { l1: f64, l2: f64 },
}

/// Block-separable convex part `phi`, applied to every coordinate and
/// multiplied by `scale` (the `rho / d` weight of the experiment objectives).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparablePhi {
    pub kind: PhiKind,
    pub scale: f64,
}

impl SeparablePhi {
    pub fn zero() -> Self {
        Self {
            kind: PhiKind::Zero,
            scale: 1.0,
        }
    }

    pub fn l1(lambda: f64) -> Result<Self> {
        Self::new(PhiKind::L1 { lambda }, 1.0)
    }

    pub fn elastic_net(l1: f64, l2: f64) -> Result<Self> {
        Self::new(PhiKind::ElasticNet { l1, l2 }, 1.0)
    }

    pub fn new(kind: PhiKind, scale: f64) -> Result<Self> {
        let ok = match kind {
            PhiKind::Zero => true,
            PhiKind::L1 { lambda } => lambda >= 0.0 && lambda.is_finite(),
            PhiKind::ElasticNet { l1, l2 } => {
                l1 >= 0.0 && l2 >= 0.0 && l1.is_finite() && l2.is_finite()
            }
        };
        if !ok || !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "phi weights must be nonnegative: {kind:?}, scale {scale}"
            )));
        }
        Ok(Self { kind, scale })
    }

    /// Same shape with weights multiplied by `scale`.
    pub fn scaled(self, scale: f64) -> Result<Self> {
        Self::new(self.kind, self.scale * scale)
    }

    pub fn is_zero(&self) -> bool {
        match self.kind {
            PhiKind::Zero => true,
            PhiKind::L1 { lambda } => lambda * self.scale == 0.0,
            PhiKind::ElasticNet { l1, l2 } => (l1 + l2) * self.scale == 0.0,
        }
    }

    /// Effective `(l1, l2)` weights after scaling.
    #[inline]
    fn weights(&self) -> (f64, f64) {
        match self.kind {
            PhiKind::Zero => (0.0, 0.0),
            PhiKind::L1 { lambda } => (self.scale * lambda, 0.0),
            PhiKind::ElasticNet { l1, l2 } => (self.scale * l1, self.scale * l2),
        }
    }

    #[inline]
    pub fn coordinate_value(&self, x: f64) -> f64 {
        let (a, b) = self.weights();
        a * x.abs() + 0.5 * b * x * x
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        if matches!(self.kind, PhiKind::Zero) {
            return 0.0;
        }
        x.iter().map(|&v| self.coordinate_value(v)).sum()
    }

    /// Scalar proximal step `argmin_u  y u + phi(u) + (gamma/2)(xbar - u)^2`.
    #[inline]
    pub fn prox_scalar(&self, xbar: f64, y: f64, gamma: f64) -> f64 {
        let (a, b) = self.weights();
        soft_threshold(gamma * xbar - y, a) / (gamma + b)
    }

    /// Composite block proximal mapping
    /// `argmin_x <y, x> + phi(x) + (gamma/2) ||xbar - x||^2`.
    pub fn prox_block(&self, xbar: &[f64], y: &[f64], gamma: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; xbar.len()];
        self.prox_into(xbar, y, gamma, &mut out)?;
        Ok(out)
    }

    pub fn prox_into(&self, xbar: &[f64], y: &[f64], gamma: f64, out: &mut [f64]) -> Result<()> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidStep(gamma));
        }
        crate::error::check_len(xbar.len(), y.len())?;
        crate::error::check_len(xbar.len(), out.len())?;
        for ((o, &xb), &yi) in out.iter_mut().zip(xbar).zip(y) {
            *o = self.prox_scalar(xb, yi, gamma);
        }
        Ok(())
    }
}

/// `sign(v) max(|v| - t, 0)`.
#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}
