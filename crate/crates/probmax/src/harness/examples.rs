//! Built-in problem instances and benchmark configurations.

use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, FeasibleSet};
use crate::integrand::ProblemSpec;
use crate::smoothing::SmoothingParam;
use crate::solvers::SchemeKind;

use super::config::{
    ExperimentConfig, ProblemSource, ReferenceConfig, ScheduleConfig, StartConfig,
};

const DEFAULT_M: f64 = 2.0;
const DEFAULT_S: f64 = 0.1;
const DEFAULT_EPS: f64 = 0.1;

/// Polytope feasible set in R^3 over the unit ball:
/// `X = {Ax <= b}` with six constraints, `K` the unit Euclidean ball.
pub fn example1() -> ProblemSpec {
    let a = vec![
        vec![1.0, 1.0, 1.0],
        vec![-1.0, 0.0, 0.0],
        vec![-1.0, 1.0, 0.0],
        vec![0.0, -1.0, 0.0],
        vec![0.0, -1.0, 1.0],
        vec![0.0, 0.0, -1.0],
    ];
    let b = vec![3.0, -0.1, 2.0, -0.2, 1.0, -0.1];
    ProblemSpec::new(
        "example1",
        ConvexBody::ball(3, 1.0).expect("static body"),
        FeasibleSet::polytope(a, b).expect("static feasible set"),
        DEFAULT_M,
        SmoothingParam::new(DEFAULT_S).expect("static smoothing"),
        DEFAULT_EPS,
    )
    .expect("static problem")
}

/// Ball feasible set `||x - 1.2 e|| <= 1` in dimension `n` over the unit
/// ball; the whole set sits in the positive orthant.
pub fn example2(n: usize) -> Result<ProblemSpec> {
    if n < 1 {
        return Err(Error::InvalidProblem("dimension must be >= 1".into()));
    }
    ProblemSpec::new(
        format!("example2_n{n}"),
        ConvexBody::ball(n, 1.0)?,
        FeasibleSet::ball(vec![1.2; n], 1.0)?,
        DEFAULT_M,
        SmoothingParam::new(DEFAULT_S)?,
        DEFAULT_EPS,
    )
}

/// All built-in problems by name.
pub fn builtin_examples() -> Vec<(String, ProblemSpec)> {
    let mut out = vec![("example1".to_string(), example1())];
    for n in 4..=8 {
        out.push((
            format!("example2_n{n}"),
            example2(n).expect("static problem"),
        ));
    }
    out
}

pub fn by_name(name: &str) -> Result<ProblemSpec> {
    if name == "example1" {
        return Ok(example1());
    }
    if let Some(rest) = name.strip_prefix("example2_n") {
        if let Ok(n) = rest.parse::<usize>() {
            if (1..=32).contains(&n) {
                return example2(n);
            }
        }
    }
    Err(Error::InvalidConfig(format!(
        "unknown built-in problem `{name}`"
    )))
}

fn ac_schedule(a: f64, budget: u64) -> ScheduleConfig {
    ScheduleConfig {
        scheme: SchemeKind::AcVssa,
        budget,
        gamma0: None,
        beta: None,
        eta: None,
        a: Some(a),
        l_hat: None,
    }
}

/// Scheme-comparison benchmark: one polytope problem, the msa baseline plus
/// accelerated schedules with exponents 4 through 8, a common sample budget.
pub fn scheme_comparison_config() -> ExperimentConfig {
    let mut schedules = vec![ScheduleConfig {
        scheme: SchemeKind::Msa,
        budget: 10_000,
        gamma0: Some(0.5),
        beta: None,
        eta: None,
        a: None,
        l_hat: None,
    }];
    for a in 4..=8 {
        schedules.push(ac_schedule(a as f64, 10_000));
    }
    ExperimentConfig {
        problems: vec![ProblemSource::Builtin("example1".into())],
        schedules,
        replications: 20,
        base_seed: 20240,
        start: StartConfig::Interior,
        reference: ReferenceConfig::default(),
        metric_samples: 1_000_000,
        trajectory_points: 25,
        trajectory_samples: 100_000,
        lipschitz_pairs: 1000,
        lipschitz_batch: 10_000,
        out_dir: "out/scheme_comparison".into(),
    }
}

/// Dimension-sweep benchmark: the ball-constrained problem for n = 4..8 with
/// the accelerated scheme at exponent 7.
///
/// The step is pinned to 0.01 rather than the sampled default 1/(2 l_hat):
/// with only three iterations in the budget, the output is the projection of
/// the last noisy batch gradient, and a smaller step keeps that noise from
/// scattering the output along the boundary. 0.01 stays below 1/(2 l_hat)
/// for every dimension in the sweep.
pub fn dimension_sweep_config() -> ExperimentConfig {
    let mut sched = ac_schedule(7.0, 10_000);
    sched.eta = Some(0.01);
    ExperimentConfig {
        problems: (4..=8)
            .map(|n| ProblemSource::Builtin(format!("example2_n{n}")))
            .collect(),
        schedules: vec![sched],
        replications: 20,
        base_seed: 20240,
        start: StartConfig::Interior,
        reference: ReferenceConfig {
            batch: 200_000,
            max_steps: 200,
            ..ReferenceConfig::default()
        },
        metric_samples: 1_000_000,
        trajectory_points: 25,
        trajectory_samples: 100_000,
        lipschitz_pairs: 400,
        lipschitz_batch: 4_000,
        out_dir: "out/dimension_sweep".into(),
    }
}

pub fn builtin_config(name: &str) -> Result<ExperimentConfig> {
    match name {
        "scheme_comparison" => Ok(scheme_comparison_config()),
        "dimension_sweep" => Ok(dimension_sweep_config()),
        _ => Err(Error::InvalidConfig(format!(
            "unknown built-in config `{name}` (expected scheme_comparison or dimension_sweep)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    #[test]
    fn example1_shape_and_feasibility() {
        let spec = example1();
        assert_eq!(spec.dim(), 3);
        match spec.feasible() {
            FeasibleSet::Polytope { a, b, .. } => {
                assert_eq!(a.nrows(), 6);
                assert_eq!(a.ncols(), 3);
                assert_eq!(b.len(), 6);
            }
            _ => panic!("example1 should use a polytope"),
        }
        // Direct substitution: x = (0.5, 0.5, 0.5) satisfies Ax <= b.
        assert!(spec.feasible().contains(&[0.5, 0.5, 0.5], 0.0).unwrap());
        // And the lower-bound rows exclude the origin.
        assert!(!spec.feasible().contains(&[0.0, 0.0, 0.0], 1e-9).unwrap());
    }

    #[test]
    fn example2_center_and_radius() {
        let spec = example2(4).unwrap();
        match spec.feasible() {
            FeasibleSet::Ball { center, radius } => {
                assert_eq!(center, &vec![1.2; 4]);
                assert_eq!(*radius, 1.0);
            }
            _ => panic!("example2 should use a ball"),
        }
        // Entire set lies in the positive orthant.
        let anchor = spec.feasible().interior_point();
        assert!(anchor.iter().all(|&c| c > 0.0));
        assert!(linalg::norm(&anchor) > 1.0);
    }

    #[test]
    fn builtin_lookup() {
        assert!(by_name("example1").is_ok());
        assert!(by_name("example2_n6").is_ok());
        assert!(by_name("example2_nx").is_err());
        assert!(by_name("nope").is_err());
        assert_eq!(builtin_examples().len(), 6);
    }

    #[test]
    fn builtin_configs_validate() {
        scheme_comparison_config().validate().unwrap();
        dimension_sweep_config().validate().unwrap();
        assert_eq!(scheme_comparison_config().schedules.len(), 6);
        assert_eq!(dimension_sweep_config().problems.len(), 5);
        assert!(builtin_config("nope_config").is_err());
    }
}
