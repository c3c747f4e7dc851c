//! Experiment configuration: JSON text, validated on load.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, FeasibleSet};
use crate::integrand::ProblemSpec;
use crate::smoothing::SmoothingParam;
use crate::solvers::{SchemeKind, SolverSchedule, StartRule};

use super::examples;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// One or more problems; a bare string names a built-in.
    #[serde(alias = "problem", deserialize_with = "one_or_many")]
    pub problems: Vec<ProblemSource>,
    pub schedules: Vec<ScheduleConfig>,
    #[serde(default = "defaults::replications")]
    pub replications: u64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub start: StartConfig,
    #[serde(default)]
    pub reference: ReferenceConfig,
    /// Hit-or-miss samples behind each empirical-error evaluation.
    #[serde(default = "defaults::metric_samples")]
    pub metric_samples: u64,
    /// Trajectory rows kept per replication (0 disables trajectories).
    #[serde(default = "defaults::trajectory_points")]
    pub trajectory_points: usize,
    #[serde(default = "defaults::trajectory_samples")]
    pub trajectory_samples: u64,
    /// Sampled pairs and batch size behind gradient-Lipschitz estimates.
    #[serde(default = "defaults::lipschitz_pairs")]
    pub lipschitz_pairs: u64,
    #[serde(default = "defaults::lipschitz_batch")]
    pub lipschitz_batch: u64,
    #[serde(default = "defaults::out_dir")]
    pub out_dir: String,
}

mod defaults {
    pub fn replications() -> u64 {
        20
    }
    pub fn metric_samples() -> u64 {
        1_000_000
    }
    pub fn trajectory_points() -> usize {
        25
    }
    pub fn trajectory_samples() -> u64 {
        100_000
    }
    pub fn lipschitz_pairs() -> u64 {
        1000
    }
    pub fn lipschitz_batch() -> u64 {
        10_000
    }
    pub fn out_dir() -> String {
        "out".into()
    }
    pub fn problem_m() -> f64 {
        2.0
    }
    pub fn problem_s() -> f64 {
        0.1
    }
    pub fn problem_eps() -> f64 {
        0.1
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<Vec<ProblemSource>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(ProblemSource),
        Many(Vec<ProblemSource>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(p) => vec![p],
        OneOrMany::Many(v) => v,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSource {
    /// Built-in name such as `example1` or `example2_n4`.
    Builtin(String),
    Inline(ProblemConfig),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub body: BodyConfig,
    pub feasible: FeasibleConfig,
    #[serde(default = "defaults::problem_m")]
    pub m: f64,
    #[serde(default = "defaults::problem_s")]
    pub s: f64,
    #[serde(default = "defaults::problem_eps")]
    pub eps: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodyConfig {
    Ball {
        dim: usize,
        radius: f64,
    },
    Box {
        half_widths: Vec<f64>,
    },
    Ellipsoid {
        shape: Vec<Vec<f64>>,
    },
    SymPolytope {
        rows: Vec<Vec<f64>>,
        #[serde(default)]
        volume_override: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeasibleConfig {
    Polytope { a: Vec<Vec<f64>>, b: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartConfig {
    #[default]
    Interior,
    RandomUniform,
    Fixed {
        point: Vec<f64>,
    },
}

impl StartConfig {
    pub fn to_rule(&self) -> StartRule {
        match self {
            StartConfig::Interior => StartRule::Interior,
            StartConfig::RandomUniform => StartRule::RandomUniform,
            StartConfig::Fixed { point } => StartRule::Fixed(point.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    #[default]
    Compute,
    Load,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    #[serde(default)]
    pub mode: ReferenceMode,
    #[serde(default = "ref_defaults::batch")]
    pub batch: u64,
    #[serde(default = "ref_defaults::max_steps")]
    pub max_steps: u64,
    #[serde(default = "ref_defaults::tolerance")]
    pub tolerance: f64,
    #[serde(default = "ref_defaults::eval_samples")]
    pub eval_samples: u64,
}

mod ref_defaults {
    pub fn batch() -> u64 {
        1_000_000
    }
    pub fn max_steps() -> u64 {
        500
    }
    pub fn tolerance() -> f64 {
        1e-6
    }
    pub fn eval_samples() -> u64 {
        10_000_000
    }
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            mode: ReferenceMode::Compute,
            batch: ref_defaults::batch(),
            max_steps: ref_defaults::max_steps(),
            tolerance: ref_defaults::tolerance(),
            eval_samples: ref_defaults::eval_samples(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub scheme: SchemeKind,
    pub budget: u64,
    #[serde(default)]
    pub gamma0: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub l_hat: Option<f64>,
}

impl ScheduleConfig {
    /// Whether resolving this schedule needs a sampled Lipschitz estimate.
    pub fn needs_lipschitz(&self) -> bool {
        self.scheme == SchemeKind::AcVssa && self.eta.is_none()
    }

    /// Fills problem-dependent defaults: `beta = eps^2`, `gamma0 = 0.5`,
    /// `eta = 1/(2 l_hat)`.
    pub fn resolve(
        &self,
        spec: &ProblemSpec,
        l_hat_estimate: Option<f64>,
    ) -> Result<SolverSchedule> {
        let beta = self.beta.unwrap_or(spec.eps() * spec.eps());
        match self.scheme {
            SchemeKind::Msa => SolverSchedule::msa(self.gamma0.unwrap_or(0.5), beta, self.budget),
            SchemeKind::AcVssa => {
                let a = self.a.ok_or_else(|| {
                    Error::InvalidConfig(
                        "ac_vssa schedules require the sample-size exponent `a`".into(),
                    )
                })?;
                let l_hat = self.l_hat.or(l_hat_estimate);
                let eta = match self.eta {
                    Some(e) => e,
                    None => {
                        let l = l_hat.ok_or_else(|| {
                            Error::InvalidConfig(
                                "ac_vssa schedules need `eta`, `l_hat`, or a sampled estimate"
                                    .into(),
                            )
                        })?;
                        0.5 / l
                    }
                };
                SolverSchedule::ac_vssa(eta, beta, a, self.budget, l_hat)
            }
        }
    }
}

impl ExperimentConfig {
    /// Structural validation with constraint names in the messages.
    pub fn validate(&self) -> Result<()> {
        if self.problems.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one problem is required".into(),
            ));
        }
        if self.schedules.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one schedule is required".into(),
            ));
        }
        if self.replications < 1 {
            return Err(Error::InvalidConfig("replications must be >= 1".into()));
        }
        if self.metric_samples < 1 {
            return Err(Error::InvalidConfig("metric_samples must be >= 1".into()));
        }
        if self.reference.batch < 1 || self.reference.max_steps < 1 {
            return Err(Error::InvalidConfig(
                "reference batch and max_steps must be >= 1".into(),
            ));
        }
        if !(self.reference.tolerance > 0.0) {
            return Err(Error::InvalidConfig(
                "reference tolerance must be positive".into(),
            ));
        }
        for (i, s) in self.schedules.iter().enumerate() {
            if s.budget < 1 {
                return Err(Error::InvalidConfig(format!(
                    "schedule {i}: budget must be >= 1"
                )));
            }
            if s.scheme == SchemeKind::AcVssa {
                match s.a {
                    None => {
                        return Err(Error::InvalidConfig(format!(
                            "schedule {i}: ac_vssa requires the exponent `a`"
                        )))
                    }
                    Some(a) if !(a > 3.0) => {
                        return Err(Error::InvalidConfig(format!(
                            "schedule {i}: sample-size exponent must satisfy a > 3, got {a}"
                        )))
                    }
                    _ => {}
                }
            }
        }
        for (i, p) in self.problems.iter().enumerate() {
            match p {
                ProblemSource::Builtin(name) => {
                    examples::by_name(name).map_err(|_| {
                        Error::InvalidConfig(format!("problem {i}: unknown built-in `{name}`"))
                    })?;
                }
                ProblemSource::Inline(cfg) => {
                    if !(cfg.eps > 0.0 && cfg.eps < 1.0) {
                        return Err(Error::InvalidConfig(format!(
                            "problem {i}: eps must lie in (0, 1), got {}",
                            cfg.eps
                        )));
                    }
                    build_problem(cfg)
                        .map_err(|e| Error::InvalidConfig(format!("problem {i}: {e}")))?;
                }
            }
        }
        Ok(())
    }

    pub fn resolve_problems(&self) -> Result<Vec<ProblemSpec>> {
        self.problems
            .iter()
            .map(|p| match p {
                ProblemSource::Builtin(name) => examples::by_name(name),
                ProblemSource::Inline(cfg) => build_problem(cfg),
            })
            .collect()
    }
}

/// Builds a validated problem from its inline description.
pub fn build_problem(cfg: &ProblemConfig) -> Result<ProblemSpec> {
    let body = match &cfg.body {
        BodyConfig::Ball { dim, radius } => ConvexBody::ball(*dim, *radius)?,
        BodyConfig::Box { half_widths } => ConvexBody::axis_box(half_widths.clone())?,
        BodyConfig::Ellipsoid { shape } => ConvexBody::ellipsoid(shape.clone())?,
        BodyConfig::SymPolytope {
            rows,
            volume_override,
        } => {
            let b = ConvexBody::sym_polytope(rows.clone())?;
            match volume_override {
                Some(v) => b.with_volume_override(*v)?,
                None => b,
            }
        }
    };
    let feasible = match &cfg.feasible {
        FeasibleConfig::Polytope { a, b } => FeasibleSet::polytope(a.clone(), b.clone())?,
        FeasibleConfig::Ball { center, radius } => FeasibleSet::ball(center.clone(), *radius)?,
    };
    ProblemSpec::new(
        cfg.name.clone().unwrap_or_else(|| "inline".into()),
        body,
        feasible,
        cfg.m,
        SmoothingParam::new(cfg.s)?,
        cfg.eps,
    )
}

/// Loads and validates a config file, reporting the JSON path and position on
/// parse errors.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        Error::InvalidConfig(format!(
            "{}: field `{}`: {}",
            path.display(),
            e.path(),
            e.inner()
        ))
    })?;
    cfg.validate()?;
    Ok(cfg)
}
