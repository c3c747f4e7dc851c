//! The reformulated integrand and its smoothed variant.
//!
//! The probability `f(x) = Prob{|xi^T x| <= 1}` with `xi` uniform on a
//! symmetric body `K` equals `C * E[F(x, xi)]` over a standard normal `xi`,
//! where
//!
//! ```text
//! F(x, xi) = (2 pi)^(n/2) exp(||xi||^2 / 2 - max(|xi^T x|^m, ||xi||_K^m))
//! C        = 1 / (Vol(K) Gamma(1 + n/m))
//! ```
//!
//! The max of two degree-`m` positively homogeneous functions is itself
//! positively homogeneous of degree `m`, which is what ties the probability to
//! the Gaussian expectation. The smoothed variant replaces `|.|` and `max`
//! with their log-sum-exp smoothings, making the integrand differentiable in
//! `x` for every `xi`.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, FeasibleSet};
use crate::linalg;
use crate::smoothing::{smooth_abs, smooth_abs_grad, smooth_max, smooth_max_grad, SmoothingParam};

/// Exponent clamp; `exp(700)` sits just under the f64 ceiling.
const EXP_CLAMP: f64 = 700.0;

static CLAMP_COUNT: AtomicU64 = AtomicU64::new(0);

/// Number of integrand evaluations that hit the exponent clamp since the last
/// reset. Nonzero counts indicate inputs far outside the body's scale.
pub fn exponent_clamp_count() -> u64 {
    CLAMP_COUNT.load(Ordering::Relaxed)
}

pub fn reset_exponent_clamp_count() {
    CLAMP_COUNT.store(0, Ordering::Relaxed);
}

fn clamped_exp(log_value: f64) -> f64 {
    if log_value.abs() > EXP_CLAMP {
        CLAMP_COUNT.fetch_add(1, Ordering::Relaxed);
        log_value.clamp(-EXP_CLAMP, EXP_CLAMP).exp()
    } else {
        log_value.exp()
    }
}

/// `C = 1 / (Vol(body) Gamma(1 + n/m))`, evaluated in log space.
pub fn normalization_constant(body: &ConvexBody, n: usize, m: f64) -> Result<f64> {
    let vol = body.volume()?;
    Ok((-vol.ln() - statrs::function::gamma::ln_gamma(1.0 + n as f64 / m)).exp())
}

/// A full problem instance: maximize `f(x) = Prob{|xi^T x| <= 1}` over the
/// feasible set, with `xi` uniform on the body.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    name: String,
    n: usize,
    body: ConvexBody,
    feasible: FeasibleSet,
    m: f64,
    s: SmoothingParam,
    eps: f64,
    c: f64,
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        body: ConvexBody,
        feasible: FeasibleSet,
        m: f64,
        s: SmoothingParam,
        eps: f64,
    ) -> Result<Self> {
        let n = body.dim();
        if feasible.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: feasible.dim(),
            });
        }
        if !(m >= 2.0) || !m.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "homogeneity degree must satisfy m >= 2 (moment boundedness), got {m}"
            )));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidProblem(format!(
                "lower bound eps must lie in (0, 1), got {eps}"
            )));
        }
        let c = normalization_constant(&body, n, m)?;
        Ok(Self {
            name: name.into(),
            n,
            body,
            feasible,
            m,
            s,
            eps,
            c,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn body(&self) -> &ConvexBody {
        &self.body
    }

    pub fn feasible(&self) -> &FeasibleSet {
        &self.feasible
    }

    pub fn degree(&self) -> f64 {
        self.m
    }

    pub fn smoothing(&self) -> SmoothingParam {
        self.s
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Cached normalization constant `C`.
    pub fn normalization(&self) -> f64 {
        self.c
    }

    fn check_dims(&self, x: &[f64], xi: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        if xi.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: xi.len(),
            });
        }
        Ok(())
    }

    /// Nonsmooth integrand `F(x, xi)`.
    pub fn integrand(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        self.check_dims(x, xi)?;
        let u = linalg::dot(xi, x).abs();
        let g = u.powf(self.m).max(self.body.gauge(xi)?.powf(self.m));
        let log_f =
            0.5 * self.n as f64 * (2.0 * std::f64::consts::PI).ln() + 0.5 * linalg::norm_sq(xi) - g;
        Ok(clamped_exp(log_f))
    }

    /// Smoothed integrand `F(x, xi; s)`; positive and at most `F(x, xi)`.
    pub fn integrand_smoothed(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        self.check_dims(x, xi)?;
        Ok(self.smoothed_inner(x, xi)?.0)
    }

    /// Gradient of the smoothed integrand in `x`:
    /// `-F_s * d1(smooth_max) * m * l^(m-1) * tanh(xi^T x / s) * xi`.
    ///
    /// Matches central finite differences of [`Self::integrand_smoothed`]
    /// away from the exponent clamp.
    pub fn integrand_smoothed_grad(&self, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        let (_, c) = self.integrand_smoothed_parts(x, xi)?;
        Ok(xi.iter().map(|v| c * v).collect())
    }

    /// Fused evaluation: returns `(F_s, c)` where the gradient in `x` is
    /// `c * xi`. Lets batch loops accumulate gradients without allocating.
    pub fn integrand_smoothed_parts(&self, x: &[f64], xi: &[f64]) -> Result<(f64, f64)> {
        self.check_dims(x, xi)?;
        let (f_s, coeff) = self.smoothed_inner(x, xi)?;
        Ok((f_s, -f_s * coeff))
    }

    /// Returns `(F_s, d1 * m * l^(m-1) * tanh(u/s))` so value and gradient
    /// share one evaluation.
    fn smoothed_inner(&self, x: &[f64], xi: &[f64]) -> Result<(f64, f64)> {
        let u = linalg::dot(xi, x);
        let l = smooth_abs(u, self.s);
        let lm = l.powf(self.m);
        let gm = self.body.gauge(xi)?.powf(self.m);
        let g_s = smooth_max(lm, gm, self.s);
        let log_f = 0.5 * self.n as f64 * (2.0 * std::f64::consts::PI).ln()
            + 0.5 * linalg::norm_sq(xi)
            - g_s;
        let f_s = clamped_exp(log_f);
        let (d1, _) = smooth_max_grad(lm, gm, self.s);
        let coeff = d1 * self.m * l.powf(self.m - 1.0) * smooth_abs_grad(u, self.s);
        Ok((f_s, coeff))
    }

    /// Content hash over everything that defines the problem, used to key
    /// reference caches.
    pub fn content_hash(&self) -> u64 {
        let mut bytes: Vec<u8> = Vec::new();
        let push_f = |buf: &mut Vec<u8>, v: f64| buf.extend_from_slice(&v.to_bits().to_le_bytes());
        bytes.extend_from_slice(&(self.n as u64).to_le_bytes());
        match self.body.kind() {
            crate::geometry::BodyKind::Ball { radius } => {
                bytes.push(1);
                push_f(&mut bytes, *radius);
            }
            crate::geometry::BodyKind::Box { half_widths } => {
                bytes.push(2);
                for w in half_widths {
                    push_f(&mut bytes, *w);
                }
            }
            crate::geometry::BodyKind::Ellipsoid { shape, .. } => {
                bytes.push(3);
                for v in shape.iter() {
                    push_f(&mut bytes, *v);
                }
            }
            crate::geometry::BodyKind::SymPolytope { rows } => {
                bytes.push(4);
                bytes.extend_from_slice(&(rows.nrows() as u64).to_le_bytes());
                for r in 0..rows.nrows() {
                    for c in 0..rows.ncols() {
                        push_f(&mut bytes, rows[(r, c)]);
                    }
                }
            }
        }
        if let Some(v) = self.body.volume_override() {
            bytes.push(5);
            push_f(&mut bytes, v);
        }
        match &self.feasible {
            FeasibleSet::Polytope { a, b, .. } => {
                bytes.push(6);
                bytes.extend_from_slice(&(a.nrows() as u64).to_le_bytes());
                for r in 0..a.nrows() {
                    for c in 0..a.ncols() {
                        push_f(&mut bytes, a[(r, c)]);
                    }
                }
                for v in b.iter() {
                    push_f(&mut bytes, *v);
                }
            }
            FeasibleSet::Ball { center, radius } => {
                bytes.push(7);
                for v in center {
                    push_f(&mut bytes, *v);
                }
                push_f(&mut bytes, *radius);
            }
        }
        push_f(&mut bytes, self.m);
        push_f(&mut bytes, self.s.get());
        push_f(&mut bytes, self.eps);
        crate::stream::fnv1a64(&bytes)
    }
}
