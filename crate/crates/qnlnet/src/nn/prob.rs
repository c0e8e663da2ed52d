//! Probability transform from the scalar post-layer output to a class
//! probability pair.

use crate::error::{Error, Result};

/// Probabilities are clamped to [PROB_CLAMP, 1 - PROB_CLAMP] so the loss
/// never sees an exact 0 or 1.
pub const PROB_CLAMP: f64 = 1e-12;

/// (p0, p1) with p1 = sigmoid(post_out) and p0 = 1 - p1. Always sums to 1
/// and lies strictly inside (0, 1).
pub fn to_probabilities(post_out: f64) -> Result<(f64, f64)> {
    if !post_out.is_finite() {
        return Err(Error::Domain(format!("non-finite post output {post_out}")));
    }
    let p1 = sigmoid(post_out).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    Ok((1.0 - p1, p1))
}

/// dp1/dpost on the clamped pair; dp0/dpost is its negation.
pub fn prob_grad(p0: f64, p1: f64) -> f64 {
    p1 * p0
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
