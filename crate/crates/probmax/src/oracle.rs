//! Seeded stochastic oracles.
//!
//! Two independent routes to the same probability:
//!
//! * Gaussian batch estimators of `f(x; s) = C E[F_s(x, xi)]` and of the raw
//!   gradient `E[grad_x F_s(x, xi)]`, with `xi` standard normal (importance
//!   sampling against the normal density);
//! * a hit-or-miss estimator drawing uniform points from the body and
//!   counting `|xi^T x| <= 1`, which never touches the reformulation.
//!
//! Agreement between the two is the artifact's central correctness check.
//!
//! Accumulation runs in fixed chunks of 1024 so results are bitwise
//! reproducible for a given seed regardless of how a batch might later be
//! split across workers.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::integrand::ProblemSpec;
use crate::linalg;
use crate::stream;

/// Fixed summation chunk; floating-point addition is not associative.
pub const CHUNK_SIZE: u64 = 1024;

/// Finite-difference step used by [`gradient_check`].
pub const FD_STEP: f64 = 1e-5;

/// One batch estimate. `value_mean` is on the probability scale (the
/// normalization constant is applied); `grad_mean`, when present, is the raw
/// sample mean of `grad_x F_s` without the constant, which is what the
/// solvers consume.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSample {
    pub value_mean: f64,
    pub value_se: f64,
    pub grad_mean: Option<Vec<f64>>,
    pub batch_size: u64,
    pub samples_consumed: u64,
}

/// Anything that can emit batch gradient estimates; lets the solvers run
/// against test doubles with known gradients.
pub trait GradientSource {
    fn dim(&self) -> usize;
    fn sample(&self, x: &[f64], batch: u64, rng: &mut ChaCha8Rng) -> Result<OracleSample>;
}

/// The production gradient source backed by a [`ProblemSpec`].
pub struct SpecSource<'a>(pub &'a ProblemSpec);

impl GradientSource for SpecSource<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn sample(&self, x: &[f64], batch: u64, rng: &mut ChaCha8Rng) -> Result<OracleSample> {
        batch_gradient(self.0, x, batch, rng)
    }
}

enum Mode {
    Smoothed { with_grad: bool },
    Exact,
}

fn batch_eval(
    spec: &ProblemSpec,
    x: &[f64],
    batch: u64,
    rng: &mut ChaCha8Rng,
    mode: Mode,
) -> Result<OracleSample> {
    if batch < 1 {
        return Err(Error::InvalidProblem("batch size must be >= 1".into()));
    }
    let dim = spec.dim();
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    let with_grad = matches!(mode, Mode::Smoothed { with_grad: true });
    let mut total = 0.0f64;
    let mut total_sq = 0.0f64;
    let mut total_grad = vec![0.0f64; if with_grad { dim } else { 0 }];
    let mut xi = vec![0.0f64; dim];
    let mut remaining = batch;
    while remaining > 0 {
        let this_chunk = remaining.min(CHUNK_SIZE);
        let mut chunk = 0.0f64;
        let mut chunk_sq = 0.0f64;
        let mut chunk_grad = vec![0.0f64; total_grad.len()];
        for _ in 0..this_chunk {
            for v in xi.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let value = match mode {
                Mode::Exact => spec.integrand(x, &xi)?,
                Mode::Smoothed { with_grad } => {
                    let (f_s, scale) = spec.integrand_smoothed_parts(x, &xi)?;
                    if with_grad {
                        linalg::axpy(scale, &xi, &mut chunk_grad);
                    }
                    f_s
                }
            };
            chunk += value;
            chunk_sq += value * value;
        }
        total += chunk;
        total_sq += chunk_sq;
        if with_grad {
            linalg::axpy(1.0, &chunk_grad, &mut total_grad);
        }
        remaining -= this_chunk;
    }
    let nf = batch as f64;
    let mean = total / nf;
    let var = if batch > 1 {
        ((total_sq - total * total / nf) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    let c = spec.normalization();
    Ok(OracleSample {
        value_mean: c * mean,
        value_se: c * (var / nf).sqrt(),
        grad_mean: with_grad.then(|| total_grad.iter().map(|g| g / nf).collect()),
        batch_size: batch,
        samples_consumed: batch,
    })
}

/// Estimates `f(x; s) = C E[F_s(x, xi)]` from `batch` normal draws.
pub fn estimate_f(
    spec: &ProblemSpec,
    x: &[f64],
    batch: u64,
    rng: &mut ChaCha8Rng,
) -> Result<OracleSample> {
    batch_eval(spec, x, batch, rng, Mode::Smoothed { with_grad: false })
}

/// Estimates `f(x) = C E[F(x, xi)]` with the unsmoothed integrand; this is
/// the quantity the hit-or-miss oracle must agree with.
pub fn estimate_f_exact(
    spec: &ProblemSpec,
    x: &[f64],
    batch: u64,
    rng: &mut ChaCha8Rng,
) -> Result<OracleSample> {
    batch_eval(spec, x, batch, rng, Mode::Exact)
}

/// Sample mean of `grad_x F_s` over `batch` fresh draws, together with the
/// value estimate from the same draws.
pub fn batch_gradient(
    spec: &ProblemSpec,
    x: &[f64],
    batch: u64,
    rng: &mut ChaCha8Rng,
) -> Result<OracleSample> {
    batch_eval(spec, x, batch, rng, Mode::Smoothed { with_grad: true })
}

/// Hit-or-miss probability estimate: the fraction of uniform body samples
/// with `|xi^T x| <= 1`, with its binomial standard error.
pub fn hit_or_miss_probability(
    spec: &ProblemSpec,
    x: &[f64],
    batch: u64,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64)> {
    if batch < 1 {
        return Err(Error::InvalidProblem("batch size must be >= 1".into()));
    }
    if x.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: x.len(),
        });
    }
    let mut hits = 0u64;
    for _ in 0..batch {
        let xi = spec.body().sample_uniform(rng)?;
        if linalg::dot(&xi, x).abs() <= 1.0 {
            hits += 1;
        }
    }
    let nf = batch as f64;
    let p_hat = hits as f64 / nf;
    Ok((p_hat, (p_hat * (1.0 - p_hat) / nf).sqrt()))
}

/// Max relative error between an analytic gradient and central finite
/// differences of `value_fn`, normalized by the larger gradient norm.
fn fd_max_rel_err(
    mut value_fn: impl FnMut(&[f64]) -> Result<f64>,
    analytic: &[f64],
    x: &[f64],
    h: f64,
) -> Result<f64> {
    let mut fd = vec![0.0; x.len()];
    for i in 0..x.len() {
        let mut xp = x.to_vec();
        xp[i] += h;
        let mut xm = x.to_vec();
        xm[i] -= h;
        fd[i] = (value_fn(&xp)? - value_fn(&xm)?) / (2.0 * h);
    }
    let denom = linalg::norm(&fd).max(linalg::norm(analytic)).max(1e-8);
    Ok(fd
        .iter()
        .zip(analytic)
        .map(|(a, b)| (a - b).abs() / denom)
        .fold(0.0, f64::max))
}

/// Compares [`batch_gradient`] (scaled by the normalization constant) against
/// central finite differences of [`estimate_f`] under common random numbers.
/// Returns the max relative error over coordinates.
pub fn gradient_check(
    spec: &ProblemSpec,
    x: &[f64],
    batch: u64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let base = rng.clone();
    let sample = batch_gradient(spec, x, batch, &mut base.clone())?;
    let grad = sample.grad_mean.expect("batch_gradient returns a gradient");
    let scaled: Vec<f64> = grad.iter().map(|g| g * spec.normalization()).collect();
    fd_max_rel_err(
        |p| Ok(estimate_f(spec, p, batch, &mut base.clone())?.value_mean),
        &scaled,
        x,
        FD_STEP,
    )
}

/// Max sampled difference quotient `||gbar(x) - gbar(y)|| / ||x - y||` of the
/// batch gradient over uniform pairs in the feasible set, with common random
/// numbers inside each pair. A finite, batch-stable value supports the
/// Lipschitz-gradient assumption and calibrates default step sizes.
pub fn estimate_gradient_lipschitz(
    spec: &ProblemSpec,
    pairs: u64,
    batch: u64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let x = spec.feasible().sample_uniform(rng)?;
        let y = spec.feasible().sample_uniform(rng)?;
        let d = linalg::dist(&x, &y);
        if d < 1e-9 {
            continue;
        }
        let batch_seed: u64 = rng.random();
        let brng = stream::derive_rng(batch_seed, &[stream::TAG_LIPSCHITZ]);
        let gx = batch_gradient(spec, &x, batch, &mut brng.clone())?
            .grad_mean
            .unwrap();
        let gy = batch_gradient(spec, &y, batch, &mut brng.clone())?
            .grad_mean
            .unwrap();
        worst = worst.max(linalg::dist(&gx, &gy) / d);
    }
    if !worst.is_finite() || worst == 0.0 {
        return Err(Error::OracleMismatch(
            "gradient difference quotients degenerate; cannot estimate a Lipschitz constant".into(),
        ));
    }
    Ok(worst)
}

/// Empirical second-moment proxy for the gradient noise: mean of
/// `||g_i - gbar||^2` over single-sample gradients at `x`.
pub fn estimate_gradient_noise(
    spec: &ProblemSpec,
    x: &[f64],
    batch: u64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let dim = spec.dim();
    let mut grads: Vec<Vec<f64>> = Vec::with_capacity(batch as usize);
    let mut xi = vec![0.0; dim];
    let mut mean = vec![0.0; dim];
    for _ in 0..batch {
        for v in xi.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let (_, scale) = spec.integrand_smoothed_parts(x, &xi)?;
        let g: Vec<f64> = xi.iter().map(|v| scale * v).collect();
        linalg::axpy(1.0 / batch as f64, &g, &mut mean);
        grads.push(g);
    }
    Ok(grads
        .iter()
        .map(|g| linalg::dist(g, &mean).powi(2))
        .sum::<f64>()
        / batch as f64)
}
