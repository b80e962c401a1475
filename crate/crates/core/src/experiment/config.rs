//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::scaling::GaussianFamily;
use crate::integrators::{GoodSetSpec, IntegratorSpec, Scheme, REFERENCE_DEFAULT_TOL};
use crate::kernels::{KernelKind, KernelSpec};
use crate::potentials::{ConvexityBounds, TargetSpec};
use crate::{Error, Result};

/// A full experiment: one task plus the blocks it draws on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default)]
    pub target: Option<TargetSpec>,
    #[serde(default)]
    pub kernel: Option<KernelConfig>,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub metric: MetricConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// What to run, keyed by the task name: `{"certify": {"trials": 100}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    /// Run one chain and dump its trace.
    Sample {
        #[serde(default)]
        x0: Option<Vec<f64>>,
    },
    /// Synchronously couple two chains.
    Couple { x0: Vec<f64>, y0: Vec<f64> },
    /// Contraction certificate at time `T` (default `√m2/(2√2 M2)`).
    Certify {
        #[serde(default, rename = "T")]
        time: Option<f64>,
        #[serde(default = "default_trials")]
        trials: usize,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    /// Drift estimates at the given starting radii.
    Drift { radii: Vec<f64> },
    /// Good-set exit frequency.
    Goodset {
        #[serde(default)]
        g_inf: Option<f64>,
        #[serde(default)]
        g_2: Option<f64>,
    },
    /// `W1` between two point files.
    Distance { a: PathBuf, b: PathBuf },
    /// Rounding matrix at an anchor (default the minimizer).
    Precondition {
        #[serde(default)]
        anchor: Option<Vec<f64>>,
    },
    /// Checks a rounding matrix built at `anchor` on bulk points.
    VerifyRounding {
        points: PathBuf,
        #[serde(default)]
        anchor: Option<Vec<f64>>,
    },
    /// Dimension-scaling study on a Gaussian family.
    Scaling {
        #[serde(default = "GaussianFamily::standard")]
        family: GaussianFamily,
        #[serde(default = "default_scaling_kind")]
        kernel: KernelKind,
        scheme: String,
        dims: Vec<usize>,
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_min_steps")]
        min_steps: usize,
    },
}

fn default_trials() -> usize {
    1000
}

fn default_tol() -> f64 {
    REFERENCE_DEFAULT_TOL
}

fn default_scaling_kind() -> KernelKind {
    KernelKind::Unadjusted
}

fn default_c() -> f64 {
    1.0
}

fn default_min_steps() -> usize {
    50
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Sample { .. } => "sample",
            Task::Couple { .. } => "couple",
            Task::Certify { .. } => "certify",
            Task::Drift { .. } => "drift",
            Task::Goodset { .. } => "goodset",
            Task::Distance { .. } => "distance",
            Task::Precondition { .. } => "precondition",
            Task::VerifyRounding { .. } => "verify-rounding",
            Task::Scaling { .. } => "scaling",
        }
    }
}

/// Kernel block: kind plus integrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub kind: KernelKind,
    #[serde(default)]
    pub integrator: IntegratorConfig,
}

/// Integrator block: `{"scheme", "theta", "T", "k", "tol", "good_set"}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    /// `exact_gaussian`, `euler`, `leapfrog`, `reference` or `guarded`.
    #[serde(default)]
    pub scheme: Option<String>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default, rename = "T")]
    pub time: Option<f64>,
    /// Must match the scheme's order when given.
    #[serde(default)]
    pub k: Option<u32>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub good_set: Option<GoodSetConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoodSetConfig {
    #[serde(default)]
    pub g_inf: Option<f64>,
    #[serde(default)]
    pub g_2: Option<f64>,
    #[serde(default)]
    pub block_dim: Option<usize>,
}

impl GoodSetConfig {
    pub fn resolve(&self, dim: usize, default_block: usize) -> GoodSetSpec {
        let block = self.block_dim.unwrap_or(default_block);
        let d = GoodSetSpec::with_defaults(dim, block);
        GoodSetSpec {
            g_inf: self.g_inf.unwrap_or(d.g_inf),
            g_2: self.g_2.unwrap_or(d.g_2),
            block_dim: block,
        }
    }
}

impl KernelConfig {
    /// Resolves defaults against the target: `T = √m2/(2√2 M2)`, the scheme
    /// `exact_gaussian` for the ideal kernel on Gaussians (`reference`
    /// otherwise) and `leapfrog` for the numerical kernels.
    pub fn build(
        &self,
        bounds: &ConvexityBounds,
        dim: usize,
        block_dim: usize,
        gaussian: bool,
    ) -> Result<KernelSpec> {
        let ic = &self.integrator;
        let time = ic.time.unwrap_or_else(|| bounds.default_time());
        let scheme_name = ic.scheme.clone().unwrap_or_else(|| {
            match (self.kind, gaussian) {
                (KernelKind::Ideal, true) => "exact_gaussian",
                (KernelKind::Ideal, false) => "reference",
                _ => "leapfrog",
            }
            .to_string()
        });
        let scheme = match scheme_name.as_str() {
            "exact_gaussian" => Scheme::ExactGaussian,
            "euler" => Scheme::Euler,
            "leapfrog" => Scheme::Leapfrog,
            "reference" => Scheme::Reference {
                tol: ic.tol.unwrap_or(REFERENCE_DEFAULT_TOL),
            },
            "guarded" => {
                let gs = ic.good_set.clone().unwrap_or(GoodSetConfig {
                    g_inf: None,
                    g_2: None,
                    block_dim: None,
                });
                Scheme::Guarded(gs.resolve(dim, block_dim))
            }
            other => {
                return Err(Error::config(
                    "kernel.integrator.scheme",
                    format!("unknown scheme `{other}`"),
                ))
            }
        };
        if let (Some(k), Some(order)) = (ic.k, scheme.order()) {
            if k != order {
                return Err(Error::config(
                    "kernel.integrator.k",
                    format!("scheme `{scheme_name}` has order {order}, not {k}"),
                ));
            }
        }
        let theta = match scheme.order() {
            Some(_) => ic.theta.ok_or_else(|| {
                Error::config("kernel.integrator.theta", "required for numerical schemes")
            })?,
            None => 0.0,
        };
        let integrator = match scheme {
            Scheme::ExactGaussian => IntegratorSpec::exact(time),
            _ => IntegratorSpec::new(scheme, theta, time)?,
        };
        KernelSpec::new(self.kind, integrator)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_steps() -> usize {
    1000
}

fn default_replicas() -> usize {
    100
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            steps: default_steps(),
            replicas: default_replicas(),
            seed: None,
        }
    }
}

impl RunConfig {
    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::config("run.seed", "a seed is required for this task"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    /// `W1` target of the scaling study.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Size of the exact reference batch drawn from `π` where one is needed.
    #[serde(default = "default_reference_samples")]
    pub reference_samples: usize,
    /// Random directions of the sliced estimator.
    #[serde(default = "default_directions")]
    pub directions: usize,
}

fn default_epsilon() -> f64 {
    0.005
}

fn default_reference_samples() -> usize {
    1000
}

fn default_directions() -> usize {
    64
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            epsilon: default_epsilon(),
            reference_samples: default_reference_samples(),
            directions: default_directions(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for the default file names.
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Overrides the task's CSV path.
    #[serde(default)]
    pub csv: Option<PathBuf>,
    /// Overrides the summary path.
    #[serde(default)]
    pub summary: Option<PathBuf>,
    /// Skips the summary file; the command-line front end prints it instead.
    #[serde(skip)]
    pub summary_to_stdout_only: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            csv: None,
            summary: None,
            summary_to_stdout_only: false,
        }
    }
}

impl OutputConfig {
    pub fn csv_path(&self, task: &str) -> PathBuf {
        self.csv
            .clone()
            .unwrap_or_else(|| self.dir.join(format!("{task}.csv")))
    }

    pub fn summary_path(&self) -> PathBuf {
        self.summary
            .clone()
            .unwrap_or_else(|| self.dir.join("summary.json"))
    }
}

/// Parses a config, reporting schema violations with their field path.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_with_path(text)
}

/// Parses any JSON document, reporting errors with their field path.
pub fn parse_with_path<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().to_string())
    })
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}
