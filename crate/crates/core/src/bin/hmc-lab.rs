//! Command-line front end of the HMC verification lab.
//!
//! Every subcommand builds an experiment config, runs it and prints the JSON
//! summary on stdout. The exit status is 0 on success, 2 when a certificate
//! fails and 1 on any error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hmc_lab::experiment::{
    load_config, parse_with_path, run_experiment, ExperimentConfig, GaussianFamily,
    IntegratorConfig, KernelConfig, MetricConfig, OutputConfig, RunConfig, Task,
};
use hmc_lab::potentials::TargetSpec;
use hmc_lab::{parallel, KernelKind, Result};

#[derive(Parser, Debug)]
#[command(
    name = "hmc-lab",
    version,
    about = "HMC sampler and verification lab for strongly log-concave targets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one chain and write its trace as CSV (step, x0.., H, accepted).
    Sample {
        #[command(flatten)]
        target: TargetArg,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long)]
        seed: u64,
        /// Starting point, comma separated; defaults to the minimizer.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        #[arg(long, default_value = "chain.csv")]
        out: PathBuf,
        #[command(flatten)]
        summary: SummaryArg,
    },
    /// Couple two chains through shared momenta and fit the contraction rate.
    Couple {
        #[command(flatten)]
        target: TargetArg,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        x0: Vec<f64>,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        y0: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "coupling.csv")]
        out: PathBuf,
        #[command(flatten)]
        summary: SummaryArg,
    },
    /// Deterministic contraction certificate over random pairs.
    Certify {
        #[command(flatten)]
        target: TargetArg,
        /// Integration time; defaults to sqrt(m2)/(2 sqrt(2) M2).
        #[arg(long = "T")]
        time: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        summary: SummaryArg,
    },
    /// Drift condition estimates at a list of starting radii.
    Drift {
        #[command(flatten)]
        target: TargetArg,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        replicas: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "drift.csv")]
        out: PathBuf,
        #[command(flatten)]
        summary: SummaryArg,
    },
    /// Good-set exit frequency of a chain on a separable target.
    Goodset {
        #[command(flatten)]
        target: TargetArg,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        g_inf: Option<f64>,
        #[arg(long = "g2")]
        g_2: Option<f64>,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 100)]
        replicas: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        summary: SummaryArg,
    },
    /// W1 and the Prokhorov bound between two CSV point files.
    Distance {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 64)]
        directions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        summary: SummaryArg,
    },
    /// Rounding matrix sqrt(H_x) at an anchor, written as CSV.
    Precondition {
        #[command(flatten)]
        target: TargetArg,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        anchor: Option<Vec<f64>>,
        #[arg(long, default_value = "rounding.csv")]
        out: PathBuf,
        #[command(flatten)]
        summary: SummaryArg,
    },
    /// Check the rounded Hessian spectrum on bulk points from a CSV file.
    VerifyRounding {
        #[command(flatten)]
        target: TargetArg,
        #[arg(long)]
        points: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        anchor: Option<Vec<f64>>,
        #[command(flatten)]
        summary: SummaryArg,
    },
    /// Gradient evaluations to reach a W1 target across dimensions.
    Scaling {
        #[arg(long, default_value = "leapfrog")]
        scheme: String,
        #[arg(long, default_value = "unadjusted")]
        kernel: KernelKind,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64,128,256")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 0.005)]
        epsilon: f64,
        #[arg(long, default_value_t = 200)]
        replicas: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "scaling.csv")]
        out: PathBuf,
        #[command(flatten)]
        summary: SummaryArg,
    },
    /// Run an experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args, Debug)]
struct TargetArg {
    /// JSON file holding a target block, e.g. {"kind": "gaussian", "eigenvalues": [1, 4]}.
    #[arg(long)]
    target_config: PathBuf,
}

#[derive(Args, Debug)]
struct KernelArgs {
    /// ideal, unadjusted or metropolis.
    #[arg(long)]
    kernel: Option<KernelKind>,
    /// exact_gaussian, euler, leapfrog, reference or guarded.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    theta: Option<f64>,
    /// Integration time; defaults to sqrt(m2)/(2 sqrt(2) M2).
    #[arg(long = "T")]
    time: Option<f64>,
}

#[derive(Args, Debug)]
struct SummaryArg {
    /// Also write the JSON summary to this file.
    #[arg(long)]
    summary: Option<PathBuf>,
}

impl KernelArgs {
    fn config(&self, default_kind: KernelKind) -> KernelConfig {
        KernelConfig {
            kind: self.kernel.unwrap_or(default_kind),
            integrator: IntegratorConfig {
                scheme: self.scheme.clone(),
                theta: self.theta,
                time: self.time,
                ..IntegratorConfig::default()
            },
        }
    }
}

fn read_target(arg: &TargetArg) -> Result<(TargetSpec, PathBuf)> {
    let text = std::fs::read_to_string(&arg.target_config)?;
    let spec: TargetSpec = parse_with_path(&text)?;
    let base = arg
        .target_config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    Ok((spec, base))
}

fn output(csv: Option<PathBuf>, summary: &SummaryArg) -> OutputConfig {
    OutputConfig {
        dir: PathBuf::from("."),
        csv,
        summary: summary.summary.clone(),
        summary_to_stdout_only: summary.summary.is_none(),
    }
}

fn config(
    task: Task,
    target: Option<TargetSpec>,
    kernel: Option<KernelConfig>,
    run: RunConfig,
    output: OutputConfig,
) -> ExperimentConfig {
    ExperimentConfig {
        task,
        target,
        kernel,
        run,
        metric: MetricConfig::default(),
        output,
    }
}

fn build(cmd: Command) -> Result<(ExperimentConfig, PathBuf)> {
    let here = PathBuf::from(".");
    Ok(match cmd {
        Command::Sample {
            target,
            kernel,
            steps,
            seed,
            x0,
            out,
            summary,
        } => {
            let (t, base) = read_target(&target)?;
            let run = RunConfig {
                steps,
                seed: Some(seed),
                ..RunConfig::default()
            };
            let cfg = config(
                Task::Sample { x0 },
                Some(t),
                Some(kernel.config(KernelKind::Metropolis)),
                run,
                output(Some(out), &summary),
            );
            (cfg, base)
        }
        Command::Couple {
            target,
            kernel,
            x0,
            y0,
            steps,
            seed,
            out,
            summary,
        } => {
            let (t, base) = read_target(&target)?;
            let run = RunConfig {
                steps,
                seed: Some(seed),
                ..RunConfig::default()
            };
            let cfg = config(
                Task::Couple { x0, y0 },
                Some(t),
                Some(kernel.config(KernelKind::Ideal)),
                run,
                output(Some(out), &summary),
            );
            (cfg, base)
        }
        Command::Certify {
            target,
            time,
            trials,
            tol,
            seed,
            summary,
        } => {
            let (t, base) = read_target(&target)?;
            let run = RunConfig {
                seed: Some(seed),
                ..RunConfig::default()
            };
            let cfg = config(
                Task::Certify { time, trials, tol },
                Some(t),
                None,
                run,
                output(None, &summary),
            );
            (cfg, base)
        }
        Command::Drift {
            target,
            kernel,
            radii,
            replicas,
            seed,
            out,
            summary,
        } => {
            let (t, base) = read_target(&target)?;
            let run = RunConfig {
                replicas,
                seed: Some(seed),
                ..RunConfig::default()
            };
            let cfg = config(
                Task::Drift { radii },
                Some(t),
                Some(kernel.config(KernelKind::Ideal)),
                run,
                output(Some(out), &summary),
            );
            (cfg, base)
        }
        Command::Goodset {
            target,
            kernel,
            g_inf,
            g_2,
            steps,
            replicas,
            seed,
            summary,
        } => {
            let (t, base) = read_target(&target)?;
            let run = RunConfig {
                steps,
                replicas,
                seed: Some(seed),
            };
            let cfg = config(
                Task::Goodset { g_inf, g_2 },
                Some(t),
                Some(kernel.config(KernelKind::Unadjusted)),
                run,
                output(None, &summary),
            );
            (cfg, base)
        }
        Command::Distance {
            a,
            b,
            directions,
            seed,
            summary,
        } => {
            let run = RunConfig {
                seed: Some(seed),
                ..RunConfig::default()
            };
            let mut cfg = config(
                Task::Distance { a, b },
                None,
                None,
                run,
                output(None, &summary),
            );
            cfg.metric.directions = directions;
            (cfg, here)
        }
        Command::Precondition {
            target,
            anchor,
            out,
            summary,
        } => {
            let (t, base) = read_target(&target)?;
            let cfg = config(
                Task::Precondition { anchor },
                Some(t),
                None,
                RunConfig::default(),
                output(Some(out), &summary),
            );
            (cfg, base)
        }
        Command::VerifyRounding {
            target,
            points,
            anchor,
            summary,
        } => {
            let (t, base) = read_target(&target)?;
            let points = std::path::absolute(points)?;
            let cfg = config(
                Task::VerifyRounding { points, anchor },
                Some(t),
                None,
                RunConfig::default(),
                output(None, &summary),
            );
            (cfg, base)
        }
        Command::Scaling {
            scheme,
            kernel,
            dims,
            epsilon,
            replicas,
            seed,
            out,
            summary,
        } => {
            let run = RunConfig {
                replicas,
                seed: Some(seed),
                ..RunConfig::default()
            };
            let task = Task::Scaling {
                family: GaussianFamily::standard(),
                kernel,
                scheme,
                dims,
                c: 1.0,
                min_steps: 50,
            };
            let mut cfg = config(task, None, None, run, output(Some(out), &summary));
            cfg.metric.epsilon = epsilon;
            (cfg, here)
        }
        Command::Run { config } => {
            let cfg = load_config(&config)?;
            let base = config.parent().map(Path::to_path_buf).unwrap_or_default();
            (cfg, base)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    parallel::init_from_env();
    let result = build(cli.command).and_then(|(cfg, base)| run_experiment(&cfg, &base));
    match result {
        Ok(outcome) => {
            match serde_json::to_string_pretty(&outcome.summary) {
                Ok(text) => println!("{text}"),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            }
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
