//! Concave half of the SCAD penalty.
//!
//! SCAD is handled in split form `lambda |x| - h(x)` where
//!
//! ```text
//!          { 0                                   |x| <= lambda
//! h(x) =   { (x^2 - 2 lambda |x| + lambda^2)      lambda < |x| <= theta lambda
//!          {   / (2 (theta - 1))
//!          { lambda |x| - (theta + 1) lambda^2/2  |x| > theta lambda
//! ```
//!
//! `h` is convex, continuously differentiable, and its derivative is
//! Lipschitz with constant `1 / (theta - 1)`.

use crate::error::{Error, Result};

pub(crate) fn check(lambda: f64, theta: f64) -> Result<()> {
    if !(theta > 1.0 && theta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "scad needs theta > 1, got {theta}"
        )));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "scad needs lambda > 0, got {lambda}"
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn value_unchecked(lambda: f64, theta: f64, x: f64) -> f64 {
    let a = x.abs();
    if a <= lambda {
        0.0
    } else if a <= theta * lambda {
        (a - lambda) * (a - lambda) / (2.0 * (theta - 1.0))
    } else {
        lambda * a - 0.5 * (theta + 1.0) * lambda * lambda
    }
}

#[inline]
pub(crate) fn derivative_unchecked(lambda: f64, theta: f64, x: f64) -> f64 {
    let a = x.abs();
    if a <= lambda {
        0.0
    } else if a <= theta * lambda {
        (x - lambda * x.signum()) / (theta - 1.0)
    } else {
        lambda * x.signum()
    }
}

/// `h_{lambda,theta}(x)` for a scalar.
pub fn scad_h_value(lambda: f64, theta: f64, x: f64) -> Result<f64> {
    check(lambda, theta)?;
    Ok(value_unchecked(lambda, theta, x))
}

/// Coordinate-wise gradient of `h_{lambda,theta}`.
pub fn scad_h_subgrad(lambda: f64, theta: f64, x: &[f64]) -> Result<Vec<f64>> {
    check(lambda, theta)?;
    Ok(x.iter()
        .map(|&v| derivative_unchecked(lambda, theta, v))
        .collect())
}
