//! Replicated experiment execution with deterministic aggregation.
//!
//! Every replication owns streams derived from `(base_seed, problem index,
//! schedule index, replication index)`, so the report depends only on the
//! config and the seed, never on scheduling order. Replications run in
//! parallel; results are collected in index order.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrand::ProblemSpec;
use crate::oracle;
use crate::solvers::{RunOptions, SchemeKind, SolverSchedule, TheoryConstants};
use crate::stream::{self, TAG_GATE, TAG_METRIC, TAG_NOISE, TAG_TRAJECTORY};

use super::config::ExperimentConfig;
use super::reference::{self, Reference};

/// Internal seed for the pre-solve oracle gate.
const GATE_SEED: u64 = 0x6A7E_C0DE_0BAD_F00D;

/// Text of the sample-budget rule, echoed into reports so iteration counts
/// are self-describing.
pub const BUDGET_RULE: &str = "K = largest integer with sum_{k=1..K} floor(k^a) <= budget";

#[derive(Debug, Clone, Serialize)]
pub struct RunRow {
    pub problem: String,
    pub scheme: SchemeKind,
    pub a: Option<f64>,
    pub n: usize,
    pub replication: u64,
    /// Empirical error `f_hat(x*) - f_hat(x_out)` under the hit-or-miss
    /// metric oracle.
    pub error: f64,
    /// Combined standard error of the metric (solution and reference).
    pub metric_se: f64,
    pub f_out: f64,
    pub samples: u64,
    pub projections: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRow {
    pub problem: String,
    pub scheme: SchemeKind,
    pub a: Option<f64>,
    pub n: usize,
    pub replication: u64,
    pub iteration: u64,
    pub samples_so_far: u64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AggregateRow {
    pub problem: String,
    pub scheme: SchemeKind,
    pub a: Option<f64>,
    pub n: usize,
    pub projections: u64,
    pub samples: u64,
    pub median_error: f64,
    pub mean_error: f64,
    pub se_error: f64,
    pub replications: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GateRecord {
    pub problem: String,
    pub reformulation_estimate: f64,
    pub reformulation_se: f64,
    pub hit_or_miss_estimate: f64,
    pub hit_or_miss_se: f64,
    pub combined_se: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoryRow {
    pub problem: String,
    pub a: f64,
    pub eta: f64,
    #[serde(flatten)]
    pub constants: TheoryConstants,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellFailure {
    pub problem: String,
    pub scheme: SchemeKind,
    pub a: Option<f64>,
    pub replication: u64,
    pub message: String,
}

/// Wall-clock data, kept apart from the deterministic payload.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing {
    pub total_ms: u64,
    pub reference_ms: Vec<u64>,
    /// Aligned with `rows`.
    pub row_wall_ms: Vec<u64>,
    /// Aligned with `aggregates`.
    pub aggregate_wall_ms: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub references: Vec<Reference>,
    pub gates: Vec<GateRecord>,
    pub rows: Vec<RunRow>,
    pub aggregates: Vec<AggregateRow>,
    pub theory: Vec<TheoryRow>,
    pub failures: Vec<CellFailure>,
    pub budget_rule: String,
    /// Emitted to `trajectories.csv`, not duplicated into the JSON report.
    #[serde(skip_serializing)]
    pub trajectories: Vec<TrajectoryRow>,
    pub timing: Timing,
}

/// Pre-solve self-check: the Gaussian reformulation estimate and the
/// hit-or-miss estimate must agree at the problem's stored feasible point to
/// within four combined standard errors.
pub fn cross_oracle_gate(spec: &ProblemSpec, metric_samples: u64) -> Result<GateRecord> {
    let x = spec.feasible().interior_point();
    let n_normal = (metric_samples / 10).clamp(1_000, 100_000);
    let n_hit = metric_samples.clamp(10_000, 1_000_000);
    let hash = spec.content_hash();
    let est = oracle::estimate_f_exact(
        spec,
        &x,
        n_normal,
        &mut stream::derive_rng(GATE_SEED, &[TAG_GATE, hash, 1]),
    )?;
    let (hit, hit_se) = oracle::hit_or_miss_probability(
        spec,
        &x,
        n_hit,
        &mut stream::derive_rng(GATE_SEED, &[TAG_GATE, hash, 2]),
    )?;
    let combined = (est.value_se.powi(2) + hit_se.powi(2)).sqrt();
    let difference = (est.value_mean - hit).abs();
    let record = GateRecord {
        problem: spec.name().to_string(),
        reformulation_estimate: est.value_mean,
        reformulation_se: est.value_se,
        hit_or_miss_estimate: hit,
        hit_or_miss_se: hit_se,
        combined_se: combined,
        difference,
    };
    if difference > 4.0 * combined + 1e-12 {
        return Err(Error::OracleMismatch(format!(
            "problem `{}`: reformulation estimate {:.6} and hit-or-miss estimate {:.6} \
             disagree by {:.3e} (> 4 x combined SE {:.3e}); the reformulation or its \
             normalization constant is wrong",
            record.problem,
            record.reformulation_estimate,
            record.hit_or_miss_estimate,
            difference,
            combined,
        )));
    }
    Ok(record)
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn thin_indices(len: usize, points: usize) -> Vec<usize> {
    if points == 0 || len < 2 {
        return Vec::new();
    }
    if len <= points {
        return (0..len).collect();
    }
    let mut idx: Vec<usize> = (1..=points).map(|j| j * len / points - 1).collect();
    idx.dedup();
    idx
}

struct CellOutcome {
    row: Option<RunRow>,
    trajectory: Vec<TrajectoryRow>,
    failure: Option<CellFailure>,
    wall_ms: u64,
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    cfg: &ExperimentConfig,
    spec: &ProblemSpec,
    reference: &Reference,
    sched: &SolverSchedule,
    pi: u64,
    si: u64,
    rep: u64,
) -> CellOutcome {
    let t0 = Instant::now();
    let scheme = sched.kind();
    let a = sched.exponent();
    let fail = |message: String, wall_ms: u64| CellOutcome {
        row: None,
        trajectory: Vec::new(),
        failure: Some(CellFailure {
            problem: spec.name().to_string(),
            scheme,
            a,
            replication: rep,
            message,
        }),
        wall_ms,
    };

    let seed = stream::mix(cfg.base_seed, &[pi, si, rep]);
    let opts = RunOptions {
        start: cfg.start.to_rule(),
        store_every: (sched.budget() / 2000).max(1),
    };
    let trace = match crate::solvers::run_schedule(spec, sched, seed, &opts) {
        Ok(t) => t,
        Err(e) => return fail(e.to_string(), t0.elapsed().as_millis() as u64),
    };
    let metric = oracle::hit_or_miss_probability(
        spec,
        &trace.output_point,
        cfg.metric_samples,
        &mut stream::derive_rng(seed, &[TAG_METRIC]),
    );
    let (f_out, se_out) = match metric {
        Ok(v) => v,
        Err(e) => return fail(e.to_string(), t0.elapsed().as_millis() as u64),
    };
    let row = RunRow {
        problem: spec.name().to_string(),
        scheme,
        a,
        n: spec.dim(),
        replication: rep,
        error: reference.f_star - f_out,
        metric_se: (se_out.powi(2) + reference.f_star_se.powi(2)).sqrt(),
        f_out,
        samples: trace.samples_used,
        projections: trace.projections,
    };

    let mut trajectory = Vec::new();
    for (j, &ri) in thin_indices(trace.records.len(), cfg.trajectory_points)
        .iter()
        .enumerate()
    {
        let rec = &trace.records[ri];
        let mut rng = stream::derive_rng(seed, &[TAG_TRAJECTORY, j as u64]);
        match oracle::hit_or_miss_probability(
            spec,
            &rec.output_snapshot,
            cfg.trajectory_samples,
            &mut rng,
        ) {
            Ok((fv, _)) => trajectory.push(TrajectoryRow {
                problem: spec.name().to_string(),
                scheme,
                a,
                n: spec.dim(),
                replication: rep,
                iteration: rec.step,
                samples_so_far: rec.samples_total,
                error: reference.f_star - fv,
            }),
            Err(_) => break,
        }
    }

    CellOutcome {
        row: Some(row),
        trajectory,
        failure: None,
        wall_ms: t0.elapsed().as_millis() as u64,
    }
}

/// Runs the full experiment grid: problems x schedules x replications.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let t_total = Instant::now();
    cfg.validate()?;
    let problems = cfg.resolve_problems()?;
    let cache_dir = Path::new(&cfg.out_dir).join("cache");

    let mut gates = Vec::new();
    let mut references = Vec::new();
    let mut reference_ms = Vec::new();
    let mut schedules_per_problem: Vec<Vec<SolverSchedule>> = Vec::new();
    let needs_l_hat = cfg.schedules.iter().any(|s| s.scheme == SchemeKind::AcVssa);

    for spec in &problems {
        gates.push(cross_oracle_gate(spec, cfg.metric_samples)?);
        let l_est = if needs_l_hat {
            Some(reference::ensure_l_hat(
                spec,
                cfg.lipschitz_pairs,
                cfg.lipschitz_batch,
            )?)
        } else {
            None
        };
        let t_ref = Instant::now();
        let reference = reference::compute_or_load(
            spec,
            &cfg.reference,
            cfg.lipschitz_pairs,
            cfg.lipschitz_batch,
            Some(&cache_dir),
        )?;
        reference_ms.push(t_ref.elapsed().as_millis() as u64);
        references.push(reference);
        let resolved: Result<Vec<SolverSchedule>> = cfg
            .schedules
            .iter()
            .map(|s| {
                let sched = s.resolve(spec, l_est)?;
                sched.validate_for(spec.eps())?;
                Ok(sched)
            })
            .collect();
        schedules_per_problem.push(resolved?);
    }

    // Deterministic cell grid, executed in parallel, collected in order.
    let mut grid: Vec<(usize, usize, u64)> = Vec::new();
    for pi in 0..problems.len() {
        for si in 0..cfg.schedules.len() {
            for rep in 0..cfg.replications {
                grid.push((pi, si, rep));
            }
        }
    }
    let outcomes: Vec<CellOutcome> = grid
        .par_iter()
        .map(|&(pi, si, rep)| {
            run_cell(
                cfg,
                &problems[pi],
                &references[pi],
                &schedules_per_problem[pi][si],
                pi as u64,
                si as u64,
                rep,
            )
        })
        .collect();

    let mut rows = Vec::new();
    let mut trajectories = Vec::new();
    let mut failures = Vec::new();
    let mut row_wall_ms = Vec::new();
    let mut cell_walls: Vec<Vec<u64>> = vec![vec![]; problems.len() * cfg.schedules.len()];
    for (idx, outcome) in outcomes.into_iter().enumerate() {
        let (pi, si, _) = grid[idx];
        cell_walls[pi * cfg.schedules.len() + si].push(outcome.wall_ms);
        if let Some(row) = outcome.row {
            row_wall_ms.push(outcome.wall_ms);
            rows.push(row);
        }
        trajectories.extend(outcome.trajectory);
        if let Some(f) = outcome.failure {
            failures.push(f);
        }
    }

    let mut aggregates = Vec::new();
    let mut aggregate_wall_ms = Vec::new();
    for (pi, spec) in problems.iter().enumerate() {
        for (si, sched) in schedules_per_problem[pi].iter().enumerate() {
            let cell: Vec<&RunRow> = rows
                .iter()
                .filter(|r| {
                    r.problem == spec.name() && r.scheme == sched.kind() && r.a == sched.exponent()
                })
                .collect();
            if cell.is_empty() {
                continue;
            }
            let mut errors: Vec<f64> = cell.iter().map(|r| r.error).collect();
            errors.sort_by(f64::total_cmp);
            let mean = errors.iter().sum::<f64>() / errors.len() as f64;
            let se = if errors.len() > 1 {
                (errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>()
                    / (errors.len() as f64 - 1.0))
                    .sqrt()
                    / (errors.len() as f64).sqrt()
            } else {
                0.0
            };
            aggregates.push(AggregateRow {
                problem: spec.name().to_string(),
                scheme: sched.kind(),
                a: sched.exponent(),
                n: spec.dim(),
                projections: cell[0].projections,
                samples: cell[0].samples,
                median_error: median(&errors),
                mean_error: mean,
                se_error: se,
                replications: cell.len() as u64,
            });
            aggregate_wall_ms.push(cell_walls[pi * cfg.schedules.len() + si].iter().sum());
        }
    }

    let mut theory = Vec::new();
    for (pi, spec) in problems.iter().enumerate() {
        for sched in &schedules_per_problem[pi] {
            if let SolverSchedule::AcVssa { eta, a, l_hat, .. } = sched {
                let Some(l_hat) = l_hat else { continue };
                let Ok(c_diam) = spec.feasible().diameter_bound() else {
                    continue;
                };
                let nu_sq = reference::noise_estimate(spec, 10_000)?;
                let d_hat = {
                    let hash = spec.content_hash();
                    let f1 = oracle::estimate_f(
                        spec,
                        &spec.feasible().interior_point(),
                        10_000,
                        &mut stream::derive_rng(GATE_SEED, &[TAG_NOISE, hash, 1]),
                    )?
                    .value_mean;
                    let fs = oracle::estimate_f(
                        spec,
                        &references[pi].x_star,
                        10_000,
                        &mut stream::derive_rng(GATE_SEED, &[TAG_NOISE, hash, 2]),
                    )?
                    .value_mean;
                    (1.0 / f1 - 1.0 / fs).max(0.0)
                };
                theory.push(TheoryRow {
                    problem: spec.name().to_string(),
                    a: *a,
                    eta: *eta,
                    constants: TheoryConstants::derive(nu_sq, *eta, *a, c_diam, d_hat, *l_hat)?,
                });
            }
        }
    }

    let report = RunReport {
        config: cfg.clone(),
        references,
        gates,
        rows,
        aggregates,
        theory,
        failures,
        budget_rule: BUDGET_RULE.to_string(),
        trajectories,
        timing: Timing {
            total_ms: t_total.elapsed().as_millis() as u64,
            reference_ms,
            row_wall_ms,
            aggregate_wall_ms,
        },
    };
    verify_report(&report)?;
    Ok(report)
}

/// Independent pass over the report: aggregates must be recomputable from the
/// rows, and no row may beat the reference beyond metric noise.
pub fn verify_report(report: &RunReport) -> Result<()> {
    for row in &report.rows {
        if row.error < -3.0 * row.metric_se - 1e-12 {
            return Err(Error::OracleMismatch(format!(
                "row {}/{}/rep{} has error {:.3e} below -3 x metric SE {:.3e}; \
                 the reference is not optimal",
                row.problem,
                row.scheme.as_str(),
                row.replication,
                row.error,
                row.metric_se
            )));
        }
    }
    for agg in &report.aggregates {
        let mut errors: Vec<f64> = report
            .rows
            .iter()
            .filter(|r| r.problem == agg.problem && r.scheme == agg.scheme && r.a == agg.a)
            .map(|r| r.error)
            .collect();
        if errors.len() as u64 != agg.replications {
            return Err(Error::OracleMismatch(format!(
                "aggregate {}/{} counts {} rows, found {}",
                agg.problem,
                agg.scheme.as_str(),
                agg.replications,
                errors.len()
            )));
        }
        errors.sort_by(f64::total_cmp);
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        let med = median(&errors);
        if (mean - agg.mean_error).abs() > 1e-12 * (1.0 + mean.abs())
            || (med - agg.median_error).abs() > 1e-12 * (1.0 + med.abs())
        {
            return Err(Error::OracleMismatch(format!(
                "aggregate {}/{} does not match its rows",
                agg.problem,
                agg.scheme.as_str()
            )));
        }
    }
    Ok(())
}
