use crate::error::{Error, Result};

/// Per-row loss of a generalized linear model, evaluated at the margin
/// `z_r = a_r^T x` against target `b_r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LossKind {
    /// `(z - b)^2 / 2`.
    LeastSquares,
    /// `log(1 + exp(-b z))` with labels `b` in `{-1, +1}`.
    Logistic,
    /// Huber smoothing of `|b - z|` with width `delta`.
    Huber { delta: f64 },
}

impl LossKind {
    pub fn huber(delta: f64) -> Result<Self> {
        if delta > 0.0 && delta.is_finite() {
            Ok(Self::Huber { delta })
        } else {
            Err(Error::InvalidParameter(format!(
                "huber width must be positive, got {delta}"
            )))
        }
    }

    /// Loss of one row.
    #[inline]
    pub fn value(&self, z: f64, b: f64) -> f64 {
        match *self {
            Self::LeastSquares => 0.5 * (z - b) * (z - b),
            Self::Logistic => log1p_exp(-b * z),
            Self::Huber { delta } => huber(b - z, delta),
        }
    }

    /// Derivative of the row loss with respect to the margin `z`.
    #[inline]
    pub fn derivative(&self, z: f64, b: f64) -> f64 {
        match *self {
            Self::LeastSquares => z - b,
            Self::Logistic => -b * sigmoid(-b * z),
            Self::Huber { delta } => {
                let a = b - z;
                -(a / delta).clamp(-1.0, 1.0)
            }
        }
    }

    /// Upper bound on the second derivative of the row loss.
    pub fn curvature_bound(&self) -> f64 {
        match *self {
            Self::LeastSquares => 1.0,
            Self::Logistic => 0.25,
            Self::Huber { delta } => 1.0 / delta,
        }
    }
}

/// Huber function `H_delta(a)`.
#[inline]
pub fn huber(a: f64, delta: f64) -> f64 {
    let abs = a.abs();
    if abs <= delta {
        a * a / (2.0 * delta)
    } else {
        abs - 0.5 * delta
    }
}

/// `log(1 + exp(t))` without overflow.
#[inline]
pub fn log1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn huber_branches() {
        let h = LossKind::huber(0.1).unwrap();
        // residual b - z = 0.05 and 1.0
        assert!((h.value(0.0, 0.05) - 0.0125).abs() < 1e-15);
        assert!((h.value(0.0, 1.0) - 0.95).abs() < 1e-15);
        assert!(LossKind::huber(0.0).is_err());
    }

    #[test]
    fn logistic_guards() {
        let l = LossKind::Logistic;
        assert!((l.value(0.0, 1.0) - 2f64.ln()).abs() < 1e-15);
        assert!(l.value(1e4, -1.0).is_finite());
        assert!((l.value(1e4, -1.0) - 1e4).abs() < 1e-9);
        assert!(l.value(-1e4, -1.0) >= 0.0);
        assert!((sigmoid(800.0) - 1.0).abs() < 1e-15);
        assert!(sigmoid(-800.0) >= 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for loss in [LossKind::LeastSquares, LossKind::Logistic, LossKind::Huber { delta: 0.3 }] {
            for &(z, b) in &[(0.2, 1.0), (-1.45, -1.0), (2.0, 1.0), (0.9, 1.0)] {
                let h = 1e-6;
                let fd = (loss.value(z + h, b) - loss.value(z - h, b)) / (2.0 * h);
                assert!((fd - loss.derivative(z, b)).abs() < 1e-7, "{loss:?} {z} {b}");
            }
        }
    }
}
