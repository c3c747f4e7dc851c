//! Probability maximization over centrally symmetric convex bodies.
//!
//! Maximizes `f(x) = Prob{|xi^T x| <= 1}` over a closed convex set, with `xi`
//! uniform on a compact symmetric convex body. The probability is recast as a
//! Gaussian expectation of a positively homogeneous integrand, which two
//! stochastic approximation schemes then optimize: a projected single-sample
//! scheme with averaged iterates, and an accelerated scheme with growing
//! batch sizes that takes only a handful of projections per sample budget.
//!
//! Modules:
//! - [`geometry`]: bodies, gauges, samplers, feasible sets, projections;
//! - [`smoothing`]: log-sum-exp smoothings of `max` and `|.|`;
//! - [`integrand`]: the reformulated integrand, its smoothed gradient, and
//!   the normalization constant;
//! - [`oracle`]: seeded Gaussian batch estimators plus the independent
//!   hit-or-miss verification oracle;
//! - [`solvers`]: the two schemes, budget accounting, iterate averaging;
//! - [`harness`]: config loading, built-in problems, references, replicated
//!   experiments, CSV/JSON reports.

pub mod error;
pub mod geometry;
pub mod harness;
pub mod integrand;
pub mod linalg;
pub mod oracle;
pub mod smoothing;
pub mod solvers;
pub mod stream;

pub use error::{Error, Result};
pub use integrand::ProblemSpec;
