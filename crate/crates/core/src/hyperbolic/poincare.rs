//! Distances on the Poincaré ball of curvature `-κ`.

use crate::error::{Error, Result};
use crate::math;

#[inline]
pub(crate) fn norm_sq(z: &[f64]) -> f64 {
    z.iter().map(|x| x * x).sum()
}

#[inline]
fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Geodesic distance between two points strictly inside the ball of radius `1/√κ`.
pub fn geodesic_distance(z1: &[f64], z2: &[f64], kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::OutOfRange { what: "curvature", value: kappa });
    }
    if z1.len() != z2.len() {
        return Err(Error::InvalidInput("coordinate dimensions differ"));
    }
    let a = 1.0 - kappa * norm_sq(z1);
    let b = 1.0 - kappa * norm_sq(z2);
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::OutOfBall);
    }
    Ok(distance_unchecked(z1, z2, kappa))
}

#[inline]
pub(crate) fn distance_unchecked(z1: &[f64], z2: &[f64], kappa: f64) -> f64 {
    let a = 1.0 - kappa * norm_sq(z1);
    let b = 1.0 - kappa * norm_sq(z2);
    let x = 2.0 * kappa * dist_sq(z1, z2) / (a * b);
    math::acosh_1p(x) / math::sqrt(kappa)
}

/// Pulls `z` back to norm at most `0.999/√κ`.
pub(crate) fn project(z: &mut [f64], kappa: f64) {
    let limit = 0.999 / math::sqrt(kappa);
    let n = math::sqrt(norm_sq(z));
    if n > limit {
        let s = limit / n;
        z.iter_mut().for_each(|x| *x *= s);
    }
}
