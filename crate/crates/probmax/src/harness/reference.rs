//! Reference solutions: a deterministic high-budget comparator for the
//! empirical-error metric.
//!
//! The reference is computed by projected gradient ascent on the
//! sample-average objective: one fixed normal batch defines an empirical
//! function, ascent runs with common random numbers until the step-to-step
//! movement drops below tolerance, and the returned point is scored by an
//! independent high-budget hit-or-miss evaluation. Everything is seeded by
//! internal constants, so references depend only on the problem and the
//! reference parameters, never on the experiment seed.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrand::ProblemSpec;
use crate::linalg;
use crate::oracle;
use crate::stream::{self, TAG_LIPSCHITZ, TAG_METRIC, TAG_NOISE, TAG_REFERENCE};

use super::config::{ReferenceConfig, ReferenceMode};

/// Internal seed for reference computations.
const REFERENCE_SEED: u64 = 0x0EF5_11CE_BA5E_11DE;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Reference {
    pub problem: String,
    pub spec_hash: String,
    pub x_star: Vec<f64>,
    pub f_star: f64,
    pub f_star_se: f64,
    pub steps: u64,
    pub converged: bool,
    /// Sampled Lipschitz estimate of the raw batch-gradient field.
    pub l_hat: f64,
}

fn memo() -> &'static Mutex<HashMap<u64, Reference>> {
    static MEMO: OnceLock<Mutex<HashMap<u64, Reference>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

fn l_hat_memo() -> &'static Mutex<HashMap<u64, f64>> {
    static MEMO: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Sampled gradient-Lipschitz estimate for a problem, memoized per process.
/// Uses a fixed internal stream so the value is a pure function of the
/// problem and the sampling parameters.
pub fn ensure_l_hat(spec: &ProblemSpec, pairs: u64, batch: u64) -> Result<f64> {
    let key = stream::mix(spec.content_hash(), &[pairs, batch]);
    if let Some(v) = l_hat_memo().lock().unwrap().get(&key) {
        return Ok(*v);
    }
    let mut rng = stream::derive_rng(REFERENCE_SEED, &[TAG_LIPSCHITZ, spec.content_hash()]);
    let l = oracle::estimate_gradient_lipschitz(spec, pairs, batch, &mut rng)?;
    l_hat_memo().lock().unwrap().insert(key, l);
    Ok(l)
}

/// Empirical gradient-noise proxy at the interior point.
pub fn noise_estimate(spec: &ProblemSpec, batch: u64) -> Result<f64> {
    let mut rng = stream::derive_rng(REFERENCE_SEED, &[TAG_NOISE, spec.content_hash()]);
    let x = spec.feasible().interior_point();
    oracle::estimate_gradient_noise(spec, &x, batch, &mut rng)
}

/// Cache key over the problem content and every reference parameter.
pub fn cache_key(spec: &ProblemSpec, cfg: &ReferenceConfig, pairs: u64, batch: u64) -> u64 {
    stream::mix(
        spec.content_hash(),
        &[
            cfg.batch,
            cfg.max_steps,
            cfg.tolerance.to_bits(),
            cfg.eval_samples,
            pairs,
            batch,
        ],
    )
}

fn cache_path(dir: &Path, key: u64) -> PathBuf {
    dir.join(format!("reference_{key:016x}.json"))
}

/// Projected sample-average ascent from the interior point. Returns the
/// reference point, its independent hit-or-miss value, and the step count.
pub fn compute_reference(
    spec: &ProblemSpec,
    cfg: &ReferenceConfig,
    lipschitz_pairs: u64,
    lipschitz_batch: u64,
) -> Result<Reference> {
    let l_hat = ensure_l_hat(spec, lipschitz_pairs, lipschitz_batch)?;
    let hash = spec.content_hash();
    let base = stream::derive_rng(REFERENCE_SEED, &[TAG_REFERENCE, hash]);
    let value_at = |x: &[f64]| -> Result<f64> {
        Ok(oracle::estimate_f(spec, x, cfg.batch, &mut base.clone())?.value_mean)
    };

    let mut x = spec.feasible().interior_point();
    let mut fx = value_at(&x)?;
    let step_cap = 0.5 / l_hat;
    let mut step = step_cap;
    let mut steps = 0u64;
    let mut converged = false;

    while steps < cfg.max_steps {
        steps += 1;
        let sample = oracle::batch_gradient(spec, &x, cfg.batch, &mut base.clone())?;
        let grad = sample.grad_mean.expect("batch gradient present");
        // Backtrack until the fixed empirical objective does not decrease.
        let mut accepted = None;
        let mut trial = step;
        for _ in 0..40 {
            let mut target = x.clone();
            linalg::axpy(trial, &grad, &mut target);
            let cand = spec.feasible().project(&target)?;
            let fc = value_at(&cand)?;
            if fc >= fx - 1e-12 * fx.abs().max(1.0) {
                accepted = Some((cand, fc, trial));
                break;
            }
            trial *= 0.5;
        }
        let Some((cand, fc, used)) = accepted else {
            converged = true; // no ascent direction left on the SAA surface
            break;
        };
        let movement = linalg::dist(&x, &cand);
        x = cand;
        fx = fc;
        step = (used * 2.0).min(step_cap);
        if movement <= cfg.tolerance {
            converged = true;
            break;
        }
    }

    let mut eval_rng = stream::derive_rng(REFERENCE_SEED, &[TAG_METRIC, hash]);
    let (f_star, f_star_se) =
        oracle::hit_or_miss_probability(spec, &x, cfg.eval_samples, &mut eval_rng)?;
    Ok(Reference {
        problem: spec.name().to_string(),
        spec_hash: format!("{hash:016x}"),
        x_star: x,
        f_star,
        f_star_se,
        steps,
        converged,
        l_hat,
    })
}

/// Returns the reference for a problem, consulting the in-process memo and
/// the on-disk cache under `cache_dir` first. `Load` mode requires a cache
/// hit; `Compute` mode recomputes on miss and stores the result.
pub fn compute_or_load(
    spec: &ProblemSpec,
    cfg: &ReferenceConfig,
    lipschitz_pairs: u64,
    lipschitz_batch: u64,
    cache_dir: Option<&Path>,
) -> Result<Reference> {
    let key = cache_key(spec, cfg, lipschitz_pairs, lipschitz_batch);
    if let Some(r) = memo().lock().unwrap().get(&key) {
        return Ok(r.clone());
    }
    if let Some(dir) = cache_dir {
        let path = cache_path(dir, key);
        if path.exists() {
            let text = std::fs::read_to_string(&path)?;
            let r: Reference = serde_json::from_str(&text)
                .map_err(|e| Error::Json(format!("{}: {e}", path.display())))?;
            memo().lock().unwrap().insert(key, r.clone());
            return Ok(r);
        }
    }
    if cfg.mode == ReferenceMode::Load {
        return Err(Error::InvalidConfig(format!(
            "reference mode is `load` but no cached reference exists for key {key:016x}"
        )));
    }
    let r = compute_reference(spec, cfg, lipschitz_pairs, lipschitz_batch)?;
    if let Some(dir) = cache_dir {
        std::fs::create_dir_all(dir)?;
        let path = cache_path(dir, key);
        std::fs::write(
            &path,
            serde_json::to_string_pretty(&r).map_err(|e| Error::Json(e.to_string()))?,
        )?;
    }
    memo().lock().unwrap().insert(key, r.clone());
    Ok(r)
}
