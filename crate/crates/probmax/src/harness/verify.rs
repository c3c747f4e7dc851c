//! Self-verification battery behind the `verify` subcommand: smoothing
//! bounds, the planar integral identity, cross-oracle agreement, gradient
//! checks, and the sample-budget rule.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::geometry::{ConvexBody, FeasibleSet};
use crate::integrand::ProblemSpec;
use crate::oracle;
use crate::smoothing::{smooth_abs, smooth_max, SmoothingParam};
use crate::solvers::{budget_iterations, sample_size};
use crate::stream::derive_rng;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Sandwich bound `0 <= smoothed - exact <= s ln 2` over random inputs and
/// three smoothing scales.
pub fn check_sandwich(seed: u64) -> Check {
    let mut rng = derive_rng(seed, &[101]);
    let mut violations = 0u64;
    let scales = [1e-3, 1e-1, 1.0];
    for _ in 0..10_000 {
        let u1 = 200.0 * rng.random::<f64>() - 100.0;
        let u2 = 200.0 * rng.random::<f64>() - 100.0;
        for &sv in &scales {
            let s = SmoothingParam::new(sv).unwrap();
            let gap = smooth_max(u1, u2, s) - u1.max(u2);
            if !(0.0..=sv * 2.0f64.ln() + 1e-15).contains(&gap) {
                violations += 1;
            }
            let abs_gap = smooth_abs(u1, s) - u1.abs();
            if !(0.0..=sv * 2.0f64.ln() + 1e-15).contains(&abs_gap) {
                violations += 1;
            }
        }
    }
    Check::new(
        "smoothing sandwich",
        violations == 0,
        format!("{violations} violations over 10000 x 3 scales"),
    )
}

/// Planar identity: for the unit disk at x = 0 with degree 2, the Gaussian
/// estimate of `(1/Gamma(2)) integral exp(-g)` must equal pi within 1%.
pub fn check_disk_integral(samples: u64, seed: u64) -> Result<Check> {
    let spec = ProblemSpec::new(
        "disk",
        ConvexBody::ball(2, 1.0)?,
        FeasibleSet::ball(vec![0.0, 0.0], 1.0)?,
        2.0,
        SmoothingParam::new(0.1)?,
        0.1,
    )?;
    let mut rng = derive_rng(seed, &[102]);
    let zero = [0.0, 0.0];
    let mut sum = 0.0;
    let mut xi = [0.0f64; 2];
    for _ in 0..samples {
        xi[0] = rng.sample(StandardNormal);
        xi[1] = rng.sample(StandardNormal);
        sum += spec.integrand(&zero, &xi)?;
    }
    // E[F(0, .)] estimates integral exp(-g); Gamma(2) = 1.
    let estimate = sum / samples as f64;
    let target = std::f64::consts::PI;
    let rel = (estimate - target).abs() / target;
    Ok(Check::new(
        "planar integral identity",
        rel <= 0.01,
        format!("estimate {estimate:.6} vs pi, relative error {rel:.2e}"),
    ))
}

/// Cross-oracle agreement at the problem's stored feasible point.
pub fn check_cross_oracle(spec: &ProblemSpec, metric_samples: u64) -> Check {
    match super::experiment::cross_oracle_gate(spec, metric_samples) {
        Ok(rec) => Check::new(
            &format!("cross-oracle agreement [{}]", spec.name()),
            true,
            format!(
                "|{:.6} - {:.6}| = {:.3e} <= 4 x {:.3e}",
                rec.reformulation_estimate,
                rec.hit_or_miss_estimate,
                rec.difference,
                rec.combined_se
            ),
        ),
        Err(e) => Check::new(
            &format!("cross-oracle agreement [{}]", spec.name()),
            false,
            e.to_string(),
        ),
    }
}

/// Integrand gradient against central finite differences at random points
/// with non-negligible gradients (relative error is unmeasurable where the
/// gradient is exponentially small).
pub fn check_integrand_gradient(spec: &ProblemSpec, seed: u64) -> Result<Check> {
    let mut rng = derive_rng(seed, &[103]);
    let n = spec.dim();
    let mut worst = 0.0f64;
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < 20 && attempts < 2000 {
        attempts += 1;
        let x = spec.feasible().sample_uniform(&mut rng)?;
        let xi: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let f_s = spec.integrand_smoothed(&x, &xi)?;
        let g = spec.integrand_smoothed_grad(&x, &xi)?;
        if crate::linalg::norm(&g) < 1e-2 * f_s.max(1.0) {
            continue;
        }
        accepted += 1;
        let mut fd = vec![0.0; n];
        for i in 0..n {
            let h = 1e-6;
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            fd[i] = (spec.integrand_smoothed(&xp, &xi)? - spec.integrand_smoothed(&xm, &xi)?)
                / (2.0 * h);
        }
        let denom = crate::linalg::norm(&fd).max(crate::linalg::norm(&g));
        for i in 0..n {
            worst = worst.max((fd[i] - g[i]).abs() / denom);
        }
    }
    Ok(Check::new(
        &format!("integrand gradient [{}]", spec.name()),
        accepted == 20 && worst <= 1e-5,
        format!("max relative error {worst:.2e} over {accepted} points (bound 1e-5)"),
    ))
}

/// Batch gradient against finite differences of the value estimate, common
/// random numbers.
pub fn check_batch_gradient(spec: &ProblemSpec, batch: u64, seed: u64) -> Result<Check> {
    let mut rng = derive_rng(seed, &[104]);
    let x = spec.feasible().sample_uniform(&mut rng)?;
    let err = oracle::gradient_check(spec, &x, batch, &mut rng)?;
    Ok(Check::new(
        &format!("batch gradient CRN [{}]", spec.name()),
        err <= 1e-3,
        format!("max relative error {err:.2e} (bound 1e-3)"),
    ))
}

/// Budget rule against exact integer summation.
pub fn check_budget_rule() -> Check {
    let mut ok = true;
    let mut detail = String::new();
    for a in 4..=8u32 {
        for &budget in &[1_000u64, 10_000, 100_000] {
            let k = budget_iterations(a as f64, budget).unwrap_or(0);
            let mut used: u128 = 0;
            let mut brute = 0u64;
            loop {
                let next = (brute as u128 + 1).pow(a);
                if used + next > budget as u128 {
                    break;
                }
                used += next;
                brute += 1;
            }
            if k != brute {
                ok = false;
                detail = format!("mismatch at a={a}, budget={budget}: {k} vs {brute}");
            }
            let direct: u64 = (1..=k).map(|j| sample_size(j, a as f64)).sum();
            if direct > budget {
                ok = false;
                detail = format!("overdraft at a={a}, budget={budget}");
            }
        }
    }
    if ok {
        detail = "exact match for a in 4..8, budgets 1e3..1e5".into();
    }
    Check::new("sample-budget rule", ok, detail)
}

/// Grid identity: the maximizer of the estimated probability equals the
/// minimizer of its reciprocal, literally, on the same estimates.
pub fn grid_argmax_argmin_identity(
    spec: &ProblemSpec,
    resolution: usize,
    samples_per_point: u64,
    seed: u64,
) -> Result<(usize, usize, usize)> {
    let grid = spec.feasible().grid(resolution)?;
    let mut estimates = Vec::with_capacity(grid.len());
    for (i, point) in grid.iter().enumerate() {
        let mut rng = derive_rng(seed, &[105, i as u64]);
        let (p, _) = oracle::hit_or_miss_probability(spec, point, samples_per_point, &mut rng)?;
        estimates.push(p);
    }
    let mut argmax = 0usize;
    for (i, &p) in estimates.iter().enumerate() {
        if p > estimates[argmax] {
            argmax = i;
        }
    }
    let inverted: Vec<f64> = estimates
        .iter()
        .map(|&p| if p > 0.0 { 1.0 / p } else { f64::INFINITY })
        .collect();
    let mut argmin = 0usize;
    for (i, &h) in inverted.iter().enumerate() {
        if h < inverted[argmin] {
            argmin = i;
        }
    }
    Ok((argmax, argmin, grid.len()))
}

/// The full battery for a list of problems.
pub fn run_battery(problems: &[ProblemSpec], metric_samples: u64, seed: u64) -> Result<Vec<Check>> {
    let mut checks = vec![check_sandwich(seed), check_disk_integral(1_000_000, seed)?];
    for spec in problems {
        checks.push(check_cross_oracle(spec, metric_samples));
        checks.push(check_integrand_gradient(spec, seed)?);
        checks.push(check_batch_gradient(spec, 100_000, seed)?);
    }
    checks.push(check_budget_rule());
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_passes_on_example1() {
        let spec = super::super::examples::example1();
        let checks = run_battery(&[spec], 200_000, 7).unwrap();
        for c in &checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
