//! Experiment orchestration: JSON configs, task dispatch and result files.
//!
//! Every task writes a JSON summary carrying a `pass` flag and, where it
//! produces a table, one CSV file. Outputs are pure functions of the config.

mod config;
pub mod io;
pub mod scaling;

pub use config::{
    load_config, parse_config, parse_with_path, ExperimentConfig, GoodSetConfig, IntegratorConfig,
    KernelConfig, MetricConfig, OutputConfig, RunConfig, Task,
};
pub use scaling::{run_scaling_study, GaussianFamily, ScalingConfig, ScalingResult, ScalingRow};

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{json, Value};

use crate::bounds::log_drift_rhs;
use crate::coupling::{
    contraction_certificate, couple_synchronous, drift_check, good_set_statistics,
};
use crate::kernels::{run_chain, KernelKind, KernelSpec};
use crate::metrics::{distance, SampleBatch};
use crate::potentials::Potential;
use crate::precondition::{build_rounding, verify_rounding};
use crate::{Error, Result};

/// Result of [`run_experiment`]: the summary written to disk and the files
/// produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub task: &'static str,
    pub pass: bool,
    pub summary: Value,
    pub files: Vec<PathBuf>,
}

fn target(cfg: &ExperimentConfig, base_dir: &Path) -> Result<Arc<dyn Potential>> {
    cfg.target
        .as_ref()
        .ok_or_else(|| Error::config("target", "this task needs a target block"))?
        .build(base_dir)
}

fn kernel(
    cfg: &ExperimentConfig,
    pot: &dyn Potential,
    fallback: Option<KernelKind>,
) -> Result<KernelSpec> {
    let kc = match (&cfg.kernel, fallback) {
        (Some(k), _) => k.clone(),
        (None, Some(kind)) => KernelConfig {
            kind,
            integrator: IntegratorConfig::default(),
        },
        (None, None) => return Err(Error::config("kernel", "this task needs a kernel block")),
    };
    let block = cfg.target.as_ref().and_then(|t| t.block_dim()).unwrap_or(1);
    kc.build(
        &pot.bounds(),
        pot.dim(),
        block,
        pot.gaussian_eigenvalues().is_some(),
    )
}

fn check_dim(path: &str, v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::config(
            path,
            format!("expected {dim} coordinates, got {}", v.len()),
        ));
    }
    Ok(())
}

fn finish(
    cfg: &ExperimentConfig,
    task: &'static str,
    pass: bool,
    mut summary: Value,
    mut files: Vec<PathBuf>,
) -> Result<RunOutcome> {
    summary["task"] = json!(task);
    summary["pass"] = json!(pass);
    if !cfg.output.summary_to_stdout_only {
        let path = cfg.output.summary_path();
        io::write_json(&path, &summary)?;
        files.push(path);
    }
    Ok(RunOutcome {
        task,
        pass,
        summary,
        files,
    })
}

/// Runs the configured task. Relative input paths in the config resolve
/// against `base_dir`; outputs go where `cfg.output` says.
pub fn run_experiment(cfg: &ExperimentConfig, base_dir: &Path) -> Result<RunOutcome> {
    let name = cfg.task.name();
    match &cfg.task {
        Task::Sample { x0 } => {
            let pot = target(cfg, base_dir)?;
            let spec = kernel(cfg, pot.as_ref(), None)?;
            let seed = cfg.run.require_seed()?;
            let x0 = x0.clone().unwrap_or_else(|| pot.minimizer());
            check_dim("task.x0", &x0, pot.dim())?;
            let trace = run_chain(pot.as_ref(), &spec, &x0, cfg.run.steps, seed)?;
            let csv = cfg.output.csv_path(name);
            io::write_chain_csv(&csv, &trace)?;
            let summary = json!({
                "dim": pot.dim(),
                "steps": cfg.run.steps,
                "seed": seed,
                "kernel": spec.kind.name(),
                "scheme": spec.integrator.scheme.name(),
                "theta": spec.integrator.theta,
                "T": spec.time(),
                "ledger": trace.ledger,
                "acceptance_rate": trace.ledger.acceptance_rate(),
            });
            finish(cfg, name, true, summary, vec![csv])
        }
        Task::Couple { x0, y0 } => {
            let pot = target(cfg, base_dir)?;
            let spec = kernel(cfg, pot.as_ref(), Some(KernelKind::Ideal))?;
            check_dim("task.x0", x0, pot.dim())?;
            check_dim("task.y0", y0, pot.dim())?;
            let seed = cfg.run.require_seed()?;
            let report = couple_synchronous(pot.as_ref(), &spec, x0, y0, cfg.run.steps, seed)?;
            let csv = cfg.output.csv_path(name);
            let rows: Vec<Vec<String>> = report
                .distances
                .iter()
                .enumerate()
                .map(|(i, d)| vec![i.to_string(), d.to_string()])
                .collect();
            io::write_table(&csv, &["step".into(), "distance".into()], &rows)?;
            let summary = json!({
                "fitted_rate": report.fitted_rate,
                "bound": report.bound,
                "violations": report.violations,
                "steps": cfg.run.steps,
                "seed": seed,
            });
            finish(cfg, name, report.pass(), summary, vec![csv])
        }
        Task::Certify { time, trials, tol } => {
            let pot = target(cfg, base_dir)?;
            let seed = cfg.run.require_seed()?;
            let t = time.unwrap_or_else(|| pot.bounds().default_time());
            let report = contraction_certificate(pot.as_ref(), t, *trials, seed, *tol)?;
            let summary = json!({
                "T": t,
                "trials": report.trials,
                "worst_ratio": report.worst_ratio,
                "contraction": report.contraction,
                "seed": seed,
            });
            finish(cfg, name, report.pass, summary, vec![])
        }
        Task::Drift { radii } => {
            let pot = target(cfg, base_dir)?;
            let spec = kernel(cfg, pot.as_ref(), Some(KernelKind::Ideal))?;
            let seed = cfg.run.require_seed()?;
            let report = drift_check(pot.as_ref(), &spec, radii, cfg.run.replicas, seed)?;
            let csv = cfg.output.csv_path(name);
            let rows: Vec<Vec<String>> = report
                .radii
                .iter()
                .zip(&report.log_means)
                .zip(&report.log_std_errors)
                .map(|((r, m), s)| {
                    vec![
                        r.to_string(),
                        m.to_string(),
                        s.to_string(),
                        log_drift_rhs(*r, report.log_intercept).to_string(),
                    ]
                })
                .collect();
            io::write_table(
                &csv,
                &[
                    "radius".into(),
                    "log_mean".into(),
                    "log_std_error".into(),
                    "log_bound".into(),
                ],
                &rows,
            )?;
            let summary = serde_json::to_value(&report)?;
            finish(cfg, name, report.pass(), summary, vec![csv])
        }
        Task::Goodset { g_inf, g_2 } => {
            let spec_t = cfg
                .target
                .as_ref()
                .ok_or_else(|| Error::config("target", "this task needs a target block"))?;
            let pot = spec_t.build_separable(base_dir)?;
            let spec = kernel(cfg, &pot, None)?;
            let good = GoodSetConfig {
                g_inf: *g_inf,
                g_2: *g_2,
                block_dim: Some(pot.block_dim()),
            }
            .resolve(pot.dim(), pot.block_dim());
            let seed = cfg.run.require_seed()?;
            let report =
                good_set_statistics(&pot, &spec, &good, cfg.run.steps, cfg.run.replicas, seed)?;
            let mut summary = serde_json::to_value(&report)?;
            summary["g_inf"] = json!(good.g_inf);
            summary["g_2"] = json!(good.g_2);
            summary["block_dim"] = json!(good.block_dim);
            finish(cfg, name, true, summary, vec![])
        }
        Task::Distance { a, b } => {
            let a = SampleBatch::new(io::read_points_csv(&base_dir.join(a))?)?;
            let b = SampleBatch::new(io::read_points_csv(&base_dir.join(b))?)?;
            let seed = cfg.run.seed.unwrap_or(0);
            let report = distance(&a, &b, cfg.metric.directions, seed)?;
            let summary = serde_json::to_value(&report)?;
            finish(cfg, name, true, summary, vec![])
        }
        Task::Precondition { anchor } => {
            let pot = target(cfg, base_dir)?;
            let anchor = anchor.clone().unwrap_or_else(|| pot.minimizer());
            check_dim("task.anchor", &anchor, pot.dim())?;
            let t = build_rounding(pot.as_ref(), &anchor)?;
            let csv = cfg.output.csv_path(name);
            io::write_matrix_csv(&csv, t.matrix())?;
            let summary = json!({ "dim": pot.dim(), "anchor": anchor });
            finish(cfg, name, true, summary, vec![csv])
        }
        Task::VerifyRounding { points, anchor } => {
            let pot = target(cfg, base_dir)?;
            let anchor = anchor.clone().unwrap_or_else(|| pot.minimizer());
            check_dim("task.anchor", &anchor, pot.dim())?;
            let bulk = io::read_points_csv(&base_dir.join(points))?;
            if let Some(p) = bulk.iter().find(|p| p.len() != pot.dim()) {
                check_dim("task.points", p, pot.dim())?;
            }
            let t = build_rounding(pot.as_ref(), &anchor)?;
            let report = verify_rounding(pot.as_ref(), &t, &bulk)?;
            let summary = serde_json::to_value(&report)?;
            finish(cfg, name, report.pass, summary, vec![])
        }
        Task::Scaling {
            family,
            kernel,
            scheme,
            dims,
            c,
            min_steps,
        } => {
            let study = ScalingConfig {
                family: family.clone(),
                kind: *kernel,
                scheme: scheme.clone(),
                dims: dims.clone(),
                epsilon: cfg.metric.epsilon,
                replicas: cfg.run.replicas,
                seed: cfg.run.require_seed()?,
                c: *c,
                min_steps: *min_steps,
            };
            let result = run_scaling_study(&study)?;
            let csv = cfg.output.csv_path(name);
            let rows: Vec<Vec<String>> = result
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.dim.to_string(),
                        r.theta.to_string(),
                        r.oracle_steps.to_string(),
                        r.kernel_steps.to_string(),
                        r.gradient_evals.to_string(),
                        r.ledger_gradient_evals.to_string(),
                        r.w1.to_string(),
                    ]
                })
                .collect();
            let header: Vec<String> = [
                "dim",
                "theta",
                "oracle_steps",
                "kernel_steps",
                "gradient_evals",
                "ledger_gradient_evals",
                "w1",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            io::write_table(&csv, &header, &rows)?;
            let summary = serde_json::to_value(&result)?;
            finish(cfg, name, true, summary, vec![csv])
        }
    }
}
