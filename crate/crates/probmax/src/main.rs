//! Command-line interface: solve, bench, verify, reference.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use probmax::harness::{self, ExperimentConfig};
use probmax::{Error, Result};

#[derive(Parser)]
#[command(
    name = "probmax",
    version,
    about = "Maximize Prob{|xi^T x| <= 1} over a convex set via stochastic approximation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a single schedule from a config and report its errors.
    Solve(RunArgs),
    /// Run the full experiment grid and emit summary/trajectory/report files.
    Bench(RunArgs),
    /// Run the self-verification battery (oracle agreement, gradient and
    /// smoothing checks, budget rule).
    Verify(VerifyArgs),
    /// Compute and cache reference solutions for the config's problems.
    Reference(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to a JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in config name: `scheme_comparison` or `dimension_sweep`.
    #[arg(long)]
    builtin: Option<String>,
    /// Overrides the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's replication count.
    #[arg(long)]
    replications: Option<u64>,
    /// Schedule index for `solve` (default 0).
    #[arg(long)]
    schedule: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Optional config naming the problems to verify (default: example1).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn resolve_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.config, &args.builtin) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidConfig(
                "pass either --config or --builtin, not both".into(),
            ))
        }
        (Some(path), None) => harness::load_config(path)?,
        (None, Some(name)) => harness::builtin_config(name)?,
        (None, None) => return Err(Error::InvalidConfig(
            "a config is required: --config PATH or --builtin scheme_comparison|dimension_sweep"
                .into(),
        )),
    };
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.display().to_string();
    }
    if let Some(reps) = args.replications {
        cfg.replications = reps;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_aggregates(report: &harness::RunReport) {
    println!(
        "{:<12} {:>3} {:>3} {:>13} {:>9} {:>13} {:>13} {:>10}",
        "scheme", "a", "n", "K_projections", "samples", "median_error", "mean_error", "se_error"
    );
    for agg in &report.aggregates {
        println!(
            "{:<12} {:>3} {:>3} {:>13} {:>9} {:>13.4e} {:>13.4e} {:>10.2e}",
            agg.scheme.as_str(),
            agg.a.map(|a| a.to_string()).unwrap_or_default(),
            agg.n,
            agg.projections,
            agg.samples,
            agg.median_error,
            agg.mean_error,
            agg.se_error
        );
    }
    for f in &report.failures {
        eprintln!(
            "cell failed: {}/{} rep {}: {}",
            f.problem,
            f.scheme.as_str(),
            f.replication,
            f.message
        );
    }
}

fn cmd_bench(args: &RunArgs) -> Result<()> {
    let cfg = resolve_config(args)?;
    let report = harness::run_experiment(&cfg)?;
    print_aggregates(&report);
    let paths = harness::emit_report(&report, std::path::Path::new(&cfg.out_dir))?;
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_solve(args: &RunArgs) -> Result<()> {
    let mut cfg = resolve_config(args)?;
    let idx = args.schedule.unwrap_or(0);
    if idx >= cfg.schedules.len() {
        return Err(Error::InvalidConfig(format!(
            "schedule index {idx} out of range ({} schedules)",
            cfg.schedules.len()
        )));
    }
    cfg.schedules = vec![cfg.schedules[idx].clone()];
    let report = harness::run_experiment(&cfg)?;
    for row in &report.rows {
        println!(
            "{} rep {:>2}: error {:>10.4e}  f_out {:.6}  samples {}  projections {}",
            row.scheme.as_str(),
            row.replication,
            row.error,
            row.f_out,
            row.samples,
            row.projections
        );
    }
    print_aggregates(&report);
    let paths = harness::emit_report(&report, std::path::Path::new(&cfg.out_dir))?;
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_reference(args: &RunArgs) -> Result<()> {
    let cfg = resolve_config(args)?;
    let cache_dir = std::path::Path::new(&cfg.out_dir).join("cache");
    for spec in cfg.resolve_problems()? {
        let r = harness::compute_or_load(
            &spec,
            &cfg.reference,
            cfg.lipschitz_pairs,
            cfg.lipschitz_batch,
            Some(&cache_dir),
        )?;
        println!(
            "{}: f* = {:.6} (+- {:.1e}), steps {}, converged {}, x* = {:?}",
            r.problem, r.f_star, r.f_star_se, r.steps, r.converged, r.x_star
        );
    }
    println!("cached under {}", cache_dir.display());
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    let problems = match &args.config {
        Some(path) => harness::load_config(path)?.resolve_problems()?,
        None => vec![harness::example1()],
    };
    let checks = harness::verify::run_battery(&problems, 1_000_000, args.seed.unwrap_or(0))?;
    let mut all_ok = true;
    for c in &checks {
        println!(
            "{} {} — {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
        all_ok &= c.passed;
    }
    Ok(all_ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.cmd {
        Cmd::Solve(args) => cmd_solve(args),
        Cmd::Bench(args) => cmd_bench(args),
        Cmd::Reference(args) => cmd_reference(args),
        Cmd::Verify(args) => match cmd_verify(args) {
            Ok(true) => Ok(()),
            Ok(false) => {
                eprintln!("verification failed");
                return ExitCode::from(2);
            }
            Err(e) => Err(e),
        },
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
