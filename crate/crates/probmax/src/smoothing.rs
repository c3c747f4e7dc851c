//! Log-sum-exp smoothing of `max{u1, u2}` and `|u|`.
//!
//! The smoothed max is `g(u1, u2; s) = s ln(exp(u1/s) + exp(u2/s))`, evaluated
//! in the shifted form `max + s ln(1 + exp(-|u1 - u2|/s))` so it never
//! overflows. It satisfies the sandwich `0 <= g_s - max <= s ln 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Positive smoothing scale `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParam(f64);

impl SmoothingParam {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "smoothing scale must be positive, got {s}"
            )));
        }
        Ok(SmoothingParam(s))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// `s ln(exp(u1/s) + exp(u2/s))`, overflow-safe.
pub fn smooth_max(u1: f64, u2: f64, s: SmoothingParam) -> f64 {
    let s = s.get();
    let hi = u1.max(u2);
    hi + s * (-((u1 - u2).abs()) / s).exp().ln_1p()
}

/// Partial derivatives of [`smooth_max`]: the softmax pair, summing to one.
pub fn smooth_max_grad(u1: f64, u2: f64, s: SmoothingParam) -> (f64, f64) {
    let s = s.get();
    let d = (u1 - u2) / s;
    // Evaluate the smaller weight directly for accuracy; the pair then sums
    // to 1 exactly in floating point.
    if d >= 0.0 {
        let p2 = sigmoid(-d);
        (1.0 - p2, p2)
    } else {
        let p1 = sigmoid(d);
        (p1, 1.0 - p1)
    }
}

fn sigmoid(t: f64) -> f64 {
    // t <= 0 here, so exp(t) cannot overflow
    let e = t.exp();
    e / (1.0 + e)
}

/// Smoothed absolute value `l(u; s) = smooth_max(u, -u, s)`.
pub fn smooth_abs(u: f64, s: SmoothingParam) -> f64 {
    let sv = s.get();
    u.abs() + sv * (-2.0 * u.abs() / sv).exp().ln_1p()
}

/// Derivative of [`smooth_abs`]: `tanh(u/s)`, odd and strictly inside (-1, 1).
pub fn smooth_abs_grad(u: f64, s: SmoothingParam) -> f64 {
    (u / s.get()).tanh()
}
