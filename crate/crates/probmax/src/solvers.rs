//! Stochastic approximation schemes for the reformulated problem.
//!
//! Two schemes share the projected-ascent skeleton
//! `x <- project(x + step * gradient_estimate)`:
//!
//! * `msa`: one gradient sample and one projection per iteration, step
//!   `gamma_k / beta` with `gamma_k = gamma0 / k`, and a weighted running
//!   average of the iterates (weights `v_k = 2 gamma_k / beta`) as output;
//! * `ac_vssa`: Nesterov-style acceleration with growing batch sizes
//!   `N_k = floor(k^a)`, `a > 3`, constant step `eta / beta`, stopping at the
//!   largest `K` with `sum_{k<=K} N_k <= M`. Only `K` projections are taken
//!   for a budget of `M` samples, which is the scheme's entire point.
//!
//! Runs are sequential and deterministic given a seed; replications own
//! their derived streams.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrand::ProblemSpec;
use crate::linalg;
use crate::oracle::{GradientSource, SpecSource};
use crate::stream::{self, TAG_SOLVER, TAG_START};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Msa,
    AcVssa,
}

impl SchemeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::Msa => "msa",
            SchemeKind::AcVssa => "ac_vssa",
        }
    }
}

/// Step-size, batch-size and budget parameters for one scheme.
#[derive(Debug, Clone)]
pub enum SolverSchedule {
    Msa {
        gamma0: f64,
        beta: f64,
        budget: u64,
    },
    AcVssa {
        eta: f64,
        beta: f64,
        a: f64,
        budget: u64,
        /// Lipschitz estimate backing the step bound `eta <= 1/(2 l_hat)`.
        l_hat: Option<f64>,
    },
}

impl SolverSchedule {
    pub fn msa(gamma0: f64, beta: f64, budget: u64) -> Result<Self> {
        if !(gamma0 > 0.0) || !gamma0.is_finite() {
            return Err(Error::InvalidSchedule(format!(
                "gamma0 must be positive, got {gamma0}"
            )));
        }
        Self::check_common(beta, budget)?;
        Ok(SolverSchedule::Msa {
            gamma0,
            beta,
            budget,
        })
    }

    pub fn ac_vssa(eta: f64, beta: f64, a: f64, budget: u64, l_hat: Option<f64>) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidSchedule(format!(
                "eta must be positive, got {eta}"
            )));
        }
        if !(a > 3.0) {
            return Err(Error::InvalidSchedule(format!(
                "sample-size exponent must satisfy a > 3, got {a}"
            )));
        }
        if let Some(l) = l_hat {
            if !(l > 0.0) {
                return Err(Error::InvalidSchedule(format!(
                    "Lipschitz estimate must be positive, got {l}"
                )));
            }
            if eta > 0.5 / l + 1e-15 {
                return Err(Error::InvalidSchedule(format!(
                    "eta = {eta} exceeds 1/(2 l_hat) = {}",
                    0.5 / l
                )));
            }
        }
        Self::check_common(beta, budget)?;
        Ok(SolverSchedule::AcVssa {
            eta,
            beta,
            a,
            budget,
            l_hat,
        })
    }

    fn check_common(beta: f64, budget: u64) -> Result<()> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidSchedule(format!(
                "beta must be positive, got {beta}"
            )));
        }
        if budget < 1 {
            return Err(Error::InvalidSchedule("budget must be >= 1".into()));
        }
        Ok(())
    }

    /// Checks the problem-dependent constraint `beta^2 <= eps^2`.
    pub fn validate_for(&self, eps: f64) -> Result<()> {
        let beta = self.beta();
        if beta > eps {
            return Err(Error::InvalidSchedule(format!(
                "beta = {beta} violates beta^2 <= eps^2 with eps = {eps}"
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> SchemeKind {
        match self {
            SolverSchedule::Msa { .. } => SchemeKind::Msa,
            SolverSchedule::AcVssa { .. } => SchemeKind::AcVssa,
        }
    }

    pub fn beta(&self) -> f64 {
        match self {
            SolverSchedule::Msa { beta, .. } | SolverSchedule::AcVssa { beta, .. } => *beta,
        }
    }

    pub fn budget(&self) -> u64 {
        match self {
            SolverSchedule::Msa { budget, .. } | SolverSchedule::AcVssa { budget, .. } => *budget,
        }
    }

    pub fn exponent(&self) -> Option<f64> {
        match self {
            SolverSchedule::Msa { .. } => None,
            SolverSchedule::AcVssa { a, .. } => Some(*a),
        }
    }
}

/// How the initial iterate is chosen before the feasibility projection.
#[derive(Debug, Clone, Default)]
pub enum StartRule {
    /// The feasible set's stored point (polytope anchor or ball center).
    #[default]
    Interior,
    /// Uniform draw from the feasible set, using its own derived stream.
    RandomUniform,
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub start: StartRule,
    /// Record every `store_every`-th iteration (the last one is always kept).
    pub store_every: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            start: StartRule::Interior,
            store_every: 1,
        }
    }
}

/// One stored iteration.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub step: u64,
    /// Iterate at which the gradient batch was evaluated (`x_k`).
    pub point: Vec<f64>,
    /// Projected lookahead `y_{k+1}` for the accelerated scheme.
    pub lookahead: Option<Vec<f64>>,
    /// `lambda_k` (zero for `msa`).
    pub momentum: f64,
    pub batch: u64,
    pub samples_total: u64,
    pub projections_total: u64,
    /// Value estimate `f(x_k; s)` from the iteration's own batch.
    pub f_value: f64,
    /// What the scheme would output if stopped here: the running weighted
    /// average for `msa`, the latest projected lookahead for `ac_vssa`.
    pub output_snapshot: Vec<f64>,
}

/// Full run history plus the scheme's output point.
#[derive(Debug, Clone)]
pub struct IterateTrace {
    pub scheme: SchemeKind,
    pub start_point: Vec<f64>,
    pub records: Vec<TraceRecord>,
    /// Last iterate `x_{K+1}` (may be infeasible for `ac_vssa`, whose final
    /// momentum extrapolation is never projected).
    pub final_point: Vec<f64>,
    /// The point the scheme reports: `x_bar_K` for `msa`, `y_{K+1}` for
    /// `ac_vssa`.
    pub output_point: Vec<f64>,
    pub iterations: u64,
    pub samples_used: u64,
    pub projections: u64,
    /// Initial momentum value; the recurrence starts from zero.
    pub lambda0: f64,
    /// Sum of averaging weights `v_k` (msa only).
    pub weight_sum: f64,
    pub averaged: Option<Vec<f64>>,
}

/// Momentum recurrence `lambda <- (1 + sqrt(1 + 4 lambda^2)) / 2`.
pub fn lambda_next(lambda: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * lambda * lambda).sqrt())
}

/// `floor(k^a)` with a snap-to-integer guard against `powf` rounding just
/// below an exact integer power.
pub fn sample_size(k: u64, a: f64) -> u64 {
    let v = (k as f64).powf(a);
    let r = v.round();
    let snapped = if (v - r).abs() <= 1e-9 * r.max(1.0) {
        r
    } else {
        v.floor()
    };
    if snapped >= 9.2e18 {
        u64::MAX
    } else {
        snapped as u64
    }
}

/// Largest `K` with `sum_{k=1}^{K} floor(k^a) <= budget`.
pub fn budget_iterations(a: f64, budget: u64) -> Result<u64> {
    if !(a > 3.0) {
        return Err(Error::InvalidSchedule(format!(
            "sample-size exponent must satisfy a > 3, got {a}"
        )));
    }
    if budget < 1 {
        return Err(Error::InvalidSchedule("budget must be >= 1".into()));
    }
    let mut used = 0u64;
    let mut k = 0u64;
    loop {
        let next = sample_size(k + 1, a);
        if used.saturating_add(next) > budget {
            return Ok(k);
        }
        used += next;
        k += 1;
    }
}

/// Weighted average of the iterates of an `msa` trace.
pub fn averaged_iterate(trace: &IterateTrace) -> Result<Vec<f64>> {
    if trace.records.is_empty() && trace.iterations == 0 {
        return Err(Error::EmptyTrace);
    }
    trace.averaged.clone().ok_or_else(|| {
        Error::InvalidSchedule("averaged iterates are defined for the msa scheme only".into())
    })
}

fn resolve_start(
    spec_feasible: &crate::geometry::FeasibleSet,
    start: &StartRule,
    seed: u64,
) -> Result<Vec<f64>> {
    let raw = match start {
        StartRule::Interior => spec_feasible.interior_point(),
        StartRule::RandomUniform => {
            let mut rng = stream::derive_rng(seed, &[TAG_START]);
            spec_feasible.sample_uniform(&mut rng)?
        }
        StartRule::Fixed(p) => p.clone(),
    };
    spec_feasible.project(&raw)
}

/// Runs the modified stochastic approximation scheme.
pub fn run_msa(
    spec: &ProblemSpec,
    sched: &SolverSchedule,
    seed: u64,
    opts: &RunOptions,
) -> Result<IterateTrace> {
    let SolverSchedule::Msa {
        gamma0,
        beta,
        budget,
    } = sched
    else {
        return Err(Error::InvalidSchedule(
            "run_msa requires an msa schedule".into(),
        ));
    };
    sched.validate_for(spec.eps())?;
    let start = resolve_start(spec.feasible(), &opts.start, seed)?;
    let mut rng = stream::derive_rng(seed, &[TAG_SOLVER]);
    msa_core(
        &SpecSource(spec),
        spec.feasible(),
        *gamma0,
        *beta,
        *budget,
        start,
        &mut rng,
        opts.store_every,
    )
}

#[allow(clippy::too_many_arguments)]
fn msa_core<S: GradientSource>(
    source: &S,
    set: &crate::geometry::FeasibleSet,
    gamma0: f64,
    beta: f64,
    budget: u64,
    start: Vec<f64>,
    rng: &mut ChaCha8Rng,
    store_every: u64,
) -> Result<IterateTrace> {
    let dim = source.dim();
    let store_every = store_every.max(1);
    let mut x = start.clone();
    let mut avg_num = vec![0.0; dim];
    let mut weight_sum = 0.0;
    let mut samples = 0u64;
    let mut projections = 0u64;
    let mut records = Vec::new();

    for k in 1..=budget {
        let sample = source.sample(&x, 1, rng)?;
        let grad = sample
            .grad_mean
            .as_ref()
            .ok_or_else(|| Error::InvalidSchedule("gradient source returned no gradient".into()))?;
        samples += sample.samples_consumed;
        let gamma_k = gamma0 / k as f64;
        let v_k = 2.0 * gamma_k / beta;
        weight_sum += v_k;
        linalg::axpy(v_k, &x, &mut avg_num);

        let mut target = x.clone();
        linalg::axpy(gamma_k / beta, grad, &mut target);
        let x_next = set.project(&target)?;
        projections += 1;

        if k % store_every == 0 || k == budget {
            let snapshot: Vec<f64> = avg_num.iter().map(|v| v / weight_sum).collect();
            records.push(TraceRecord {
                step: k,
                point: x.clone(),
                lookahead: None,
                momentum: 0.0,
                batch: 1,
                samples_total: samples,
                projections_total: projections,
                f_value: sample.value_mean,
                output_snapshot: snapshot,
            });
        }
        x = x_next;
    }

    let averaged: Vec<f64> = avg_num.iter().map(|v| v / weight_sum).collect();
    Ok(IterateTrace {
        scheme: SchemeKind::Msa,
        start_point: start,
        records,
        final_point: x,
        output_point: averaged.clone(),
        iterations: budget,
        samples_used: samples,
        projections,
        lambda0: 0.0,
        weight_sum,
        averaged: Some(averaged),
    })
}

/// Runs the accelerated variable sample-size scheme.
pub fn run_ac_vssa(
    spec: &ProblemSpec,
    sched: &SolverSchedule,
    seed: u64,
    opts: &RunOptions,
) -> Result<IterateTrace> {
    let SolverSchedule::AcVssa {
        eta,
        beta,
        a,
        budget,
        ..
    } = sched
    else {
        return Err(Error::InvalidSchedule(
            "run_ac_vssa requires an ac_vssa schedule".into(),
        ));
    };
    sched.validate_for(spec.eps())?;
    let start = resolve_start(spec.feasible(), &opts.start, seed)?;
    let mut rng = stream::derive_rng(seed, &[TAG_SOLVER]);
    ac_vssa_core(
        &SpecSource(spec),
        spec.feasible(),
        *eta,
        *beta,
        *a,
        *budget,
        start,
        &mut rng,
        opts.store_every,
    )
}

#[allow(clippy::too_many_arguments)]
fn ac_vssa_core<S: GradientSource>(
    source: &S,
    set: &crate::geometry::FeasibleSet,
    eta: f64,
    beta: f64,
    a: f64,
    budget: u64,
    start: Vec<f64>,
    rng: &mut ChaCha8Rng,
    store_every: u64,
) -> Result<IterateTrace> {
    let store_every = store_every.max(1);
    let iterations = budget_iterations(a, budget)?;
    let mut x = start.clone();
    let mut y_prev = start.clone();
    let mut lambda = lambda_next(0.0); // lambda_1 from lambda_0 = 0
    let mut samples = 0u64;
    let mut projections = 0u64;
    let mut records = Vec::new();

    for k in 1..=iterations {
        let n_k = sample_size(k, a);
        let sample = source.sample(&x, n_k, rng)?;
        let grad = sample
            .grad_mean
            .as_ref()
            .ok_or_else(|| Error::InvalidSchedule("gradient source returned no gradient".into()))?;
        samples += sample.samples_consumed;

        let mut target = x.clone();
        linalg::axpy(eta / beta, grad, &mut target);
        let y_next = set.project(&target)?;
        projections += 1;

        let lambda_nx = lambda_next(lambda);
        let coeff = (lambda - 1.0) / lambda_nx;
        let x_next: Vec<f64> = y_next
            .iter()
            .zip(&y_prev)
            .map(|(yn, yp)| yn + coeff * (yn - yp))
            .collect();

        if k % store_every == 0 || k == iterations {
            records.push(TraceRecord {
                step: k,
                point: x.clone(),
                lookahead: Some(y_next.clone()),
                momentum: lambda,
                batch: n_k,
                samples_total: samples,
                projections_total: projections,
                f_value: sample.value_mean,
                output_snapshot: y_next.clone(),
            });
        }
        y_prev = y_next;
        x = x_next;
        lambda = lambda_nx;
    }

    Ok(IterateTrace {
        scheme: SchemeKind::AcVssa,
        start_point: start,
        records,
        final_point: x,
        output_point: y_prev,
        iterations,
        samples_used: samples,
        projections,
        lambda0: 0.0,
        weight_sum: 0.0,
        averaged: None,
    })
}

/// Dispatches on the schedule's scheme.
pub fn run_schedule(
    spec: &ProblemSpec,
    sched: &SolverSchedule,
    seed: u64,
    opts: &RunOptions,
) -> Result<IterateTrace> {
    match sched.kind() {
        SchemeKind::Msa => run_msa(spec, sched, seed, opts),
        SchemeKind::AcVssa => run_ac_vssa(spec, sched, seed, opts),
    }
}

/// Reporting-only constants from the accelerated scheme's rate bound.
#[derive(Debug, Clone, Serialize)]
pub struct TheoryConstants {
    pub l_hat: f64,
    pub c_diam: f64,
    pub d_hat: f64,
    pub nu_sq: f64,
    pub c_hat: f64,
}

impl TheoryConstants {
    /// `c_hat = 2 nu^2 eta (a-2)/(a-3) + 4 c_diam^2 / eta`.
    pub fn derive(
        nu_sq: f64,
        eta: f64,
        a: f64,
        c_diam: f64,
        d_hat: f64,
        l_hat: f64,
    ) -> Result<Self> {
        if !(a > 3.0) {
            return Err(Error::InvalidSchedule(format!(
                "rate constant requires a > 3, got {a}"
            )));
        }
        Ok(Self {
            l_hat,
            c_diam,
            d_hat,
            nu_sq,
            c_hat: 2.0 * nu_sq * eta * (a - 2.0) / (a - 3.0) + 4.0 * c_diam * c_diam / eta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConvexBody, FeasibleSet};
    use crate::oracle::OracleSample;
    use crate::smoothing::SmoothingParam;
    use crate::stream::derive_rng;
    use approx::assert_relative_eq;

    fn unit_ball_spec(n: usize) -> ProblemSpec {
        ProblemSpec::new(
            "test",
            ConvexBody::ball(n, 1.0).unwrap(),
            FeasibleSet::ball(vec![0.5; n], 1.0).unwrap(),
            2.0,
            SmoothingParam::new(0.1).unwrap(),
            0.1,
        )
        .unwrap()
    }

    struct ZeroSource(usize);

    impl GradientSource for ZeroSource {
        fn dim(&self) -> usize {
            self.0
        }
        fn sample(
            &self,
            _x: &[f64],
            batch: u64,
            _rng: &mut ChaCha8Rng,
        ) -> crate::Result<OracleSample> {
            Ok(OracleSample {
                value_mean: 1.0,
                value_se: 0.0,
                grad_mean: Some(vec![0.0; self.0]),
                batch_size: batch,
                samples_consumed: batch,
            })
        }
    }

    #[test]
    fn lambda_sequence() {
        let l1 = lambda_next(0.0);
        let l2 = lambda_next(l1);
        let l3 = lambda_next(l2);
        assert_eq!(l1, 1.0);
        assert_relative_eq!(l2, (1.0 + 5.0f64.sqrt()) / 2.0, max_relative = 1e-15);
        assert_relative_eq!(l3, 2.1935270853310538, max_relative = 1e-12);
    }

    #[test]
    fn lambda_grows_at_least_linearly() {
        let mut lambda = 0.0;
        for k in 1..=10_000u64 {
            lambda = lambda_next(lambda);
            assert!(
                lambda >= (k + 1) as f64 / 2.0,
                "lambda_{k} = {lambda} below (k+1)/2"
            );
        }
    }

    fn ipow(k: u64, a: u32) -> u128 {
        (k as u128).pow(a)
    }

    #[test]
    fn budget_rule_matches_brute_force() {
        for a in 4..=8u32 {
            for &budget in &[1_000u64, 10_000, 100_000] {
                let k = budget_iterations(a as f64, budget).unwrap();
                // brute force in exact integer arithmetic
                let mut used: u128 = 0;
                let mut kk = 0u64;
                loop {
                    let next = ipow(kk + 1, a);
                    if used + next > budget as u128 {
                        break;
                    }
                    used += next;
                    kk += 1;
                }
                assert_eq!(k, kk, "a = {a}, budget = {budget}");
            }
        }
        assert_eq!(budget_iterations(4.0, 10_000).unwrap(), 8);
        assert_eq!(budget_iterations(5.0, 10_000).unwrap(), 5);
        assert_eq!(budget_iterations(7.0, 10_000).unwrap(), 3);
        assert_eq!(budget_iterations(4.0, 1).unwrap(), 1);
        assert!(budget_iterations(3.0, 100).is_err());
    }

    #[test]
    fn schedule_validation() {
        assert!(SolverSchedule::msa(0.5, 0.01, 100).is_ok());
        assert!(SolverSchedule::msa(-0.5, 0.01, 100).is_err());
        assert!(SolverSchedule::msa(0.5, 0.0, 100).is_err());
        assert!(SolverSchedule::msa(0.5, 0.01, 0).is_err());
        assert!(SolverSchedule::ac_vssa(0.1, 0.01, 3.0, 100, None).is_err());
        assert!(SolverSchedule::ac_vssa(0.1, 0.01, 4.0, 100, None).is_ok());
        // eta must respect 1/(2 l_hat) when an estimate is configured
        assert!(SolverSchedule::ac_vssa(0.1, 0.01, 4.0, 100, Some(10.0)).is_err());
        assert!(SolverSchedule::ac_vssa(0.05, 0.01, 4.0, 100, Some(10.0)).is_ok());
        // beta^2 <= eps^2
        let s = SolverSchedule::msa(0.5, 0.2, 100).unwrap();
        assert!(s.validate_for(0.1).is_err());
        assert!(s.validate_for(0.3).is_ok());
    }

    #[test]
    fn zero_gradient_fixes_the_iterate() {
        let set = FeasibleSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let start = vec![0.3, -0.2];
        let mut rng = derive_rng(5, &[0]);
        let trace = msa_core(
            &ZeroSource(2),
            &set,
            0.5,
            0.01,
            50,
            start.clone(),
            &mut rng,
            1,
        )
        .unwrap();
        for rec in &trace.records {
            assert_eq!(rec.point, start);
        }
        assert_eq!(trace.final_point, start);
        // The average of identical iterates is that point up to the rounding
        // of the weighted sum.
        for (o, s) in trace.output_point.iter().zip(&start) {
            assert_relative_eq!(o, s, max_relative = 1e-12);
        }
        assert_eq!(trace.samples_used, 50);
        assert_eq!(trace.projections, 50);
    }

    #[test]
    fn msa_budget_accounting_and_feasibility() {
        let spec = unit_ball_spec(3);
        let sched = SolverSchedule::msa(0.5, 0.01, 300).unwrap();
        let trace = run_msa(&spec, &sched, 99, &RunOptions::default()).unwrap();
        assert_eq!(trace.samples_used, 300);
        assert_eq!(trace.projections, 300);
        assert_eq!(trace.iterations, 300);
        assert_eq!(trace.records.len(), 300);
        for rec in &trace.records {
            assert!(spec.feasible().contains(&rec.point, 1e-9).unwrap());
        }
        assert!(spec.feasible().contains(&trace.output_point, 1e-9).unwrap());
    }

    #[test]
    fn msa_average_matches_direct_loop() {
        let spec = unit_ball_spec(3);
        let gamma0 = 0.5;
        let beta = 0.01;
        let sched = SolverSchedule::msa(gamma0, beta, 200).unwrap();
        let trace = run_msa(&spec, &sched, 7, &RunOptions::default()).unwrap();
        // Independent accumulation: x_bar = sum(x_k / k) / sum(1 / k).
        let mut num = vec![0.0; 3];
        let mut den = 0.0;
        for rec in &trace.records {
            let w = 1.0 / rec.step as f64;
            den += w;
            linalg::axpy(w, &rec.point, &mut num);
        }
        let direct: Vec<f64> = num.iter().map(|v| v / den).collect();
        let avg = averaged_iterate(&trace).unwrap();
        for i in 0..3 {
            assert_relative_eq!(avg[i], direct[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn averaging_rejects_accelerated_traces() {
        let spec = unit_ball_spec(2);
        let sched = SolverSchedule::ac_vssa(0.01, 0.01, 4.0, 500, None).unwrap();
        let trace = run_ac_vssa(&spec, &sched, 3, &RunOptions::default()).unwrap();
        assert!(averaged_iterate(&trace).is_err());
    }

    #[test]
    fn ac_vssa_budget_and_momentum_degeneracy() {
        let spec = unit_ball_spec(3);
        let sched = SolverSchedule::ac_vssa(0.02, 0.01, 4.0, 10_000, None).unwrap();
        let trace = run_ac_vssa(&spec, &sched, 21, &RunOptions::default()).unwrap();
        assert_eq!(trace.iterations, 8);
        assert_eq!(trace.projections, 8);
        assert!(trace.samples_used <= 10_000);
        let brute: u64 = (1..=8u64).map(|k| sample_size(k, 4.0)).sum();
        assert_eq!(trace.samples_used, brute);
        // k = 1: lambda_1 = 1 makes the extrapolation vanish, so x_2 = y_2.
        assert_eq!(trace.records[0].momentum, 1.0);
        let y2 = trace.records[0].lookahead.as_ref().unwrap();
        let x2 = &trace.records[1].point;
        assert_eq!(linalg::dist(y2, x2), 0.0);
        // every projected lookahead is feasible
        for rec in &trace.records {
            assert!(spec
                .feasible()
                .contains(rec.lookahead.as_ref().unwrap(), 1e-9)
                .unwrap());
        }
        assert!(spec.feasible().contains(&trace.output_point, 1e-9).unwrap());
    }

    #[test]
    fn runs_are_deterministic() {
        let spec = unit_ball_spec(3);
        let sched = SolverSchedule::msa(0.5, 0.01, 150).unwrap();
        let a = run_msa(&spec, &sched, 42, &RunOptions::default()).unwrap();
        let b = run_msa(&spec, &sched, 42, &RunOptions::default()).unwrap();
        assert_eq!(a.output_point, b.output_point);
        assert_eq!(a.final_point, b.final_point);
        let fa: Vec<f64> = a.records.iter().map(|r| r.f_value).collect();
        let fb: Vec<f64> = b.records.iter().map(|r| r.f_value).collect();
        assert_eq!(fa, fb);
        let c = run_msa(&spec, &sched, 43, &RunOptions::default()).unwrap();
        assert_ne!(a.output_point, c.output_point);
    }

    #[test]
    fn scheme_mismatch_is_rejected() {
        let spec = unit_ball_spec(2);
        let msa = SolverSchedule::msa(0.5, 0.01, 10).unwrap();
        let ac = SolverSchedule::ac_vssa(0.01, 0.01, 4.0, 10, None).unwrap();
        assert!(run_msa(&spec, &ac, 1, &RunOptions::default()).is_err());
        assert!(run_ac_vssa(&spec, &msa, 1, &RunOptions::default()).is_err());
    }

    #[test]
    fn store_every_thins_records_but_keeps_last() {
        let spec = unit_ball_spec(2);
        let sched = SolverSchedule::msa(0.5, 0.01, 103).unwrap();
        let opts = RunOptions {
            start: StartRule::Interior,
            store_every: 10,
        };
        let trace = run_msa(&spec, &sched, 11, &opts).unwrap();
        assert_eq!(trace.records.last().unwrap().step, 103);
        assert!(trace.records.len() <= 12);
    }

    #[test]
    fn random_start_is_feasible_and_seed_dependent() {
        let spec = unit_ball_spec(3);
        let opts = RunOptions {
            start: StartRule::RandomUniform,
            store_every: 1,
        };
        let sched = SolverSchedule::msa(0.5, 0.01, 5).unwrap();
        let a = run_msa(&spec, &sched, 1, &opts).unwrap();
        let b = run_msa(&spec, &sched, 2, &opts).unwrap();
        assert!(spec.feasible().contains(&a.start_point, 1e-9).unwrap());
        assert_ne!(a.start_point, b.start_point);
    }

    #[test]
    fn theory_constants_formula() {
        let t = TheoryConstants::derive(2.0, 0.1, 4.0, 3.0, 1.0, 5.0).unwrap();
        // 2 * 2 * 0.1 * (4-2)/(4-3) + 4 * 9 / 0.1
        assert_relative_eq!(t.c_hat, 0.8 + 360.0, max_relative = 1e-12);
        assert!(TheoryConstants::derive(2.0, 0.1, 3.0, 3.0, 1.0, 5.0).is_err());
    }
}
