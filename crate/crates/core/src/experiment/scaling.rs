//! Dimension-scaling study: gradient evaluations needed to reach a `W1`
//! accuracy, as a function of dimension.
//!
//! For each dimension the unadjusted (or Metropolis) chain and the ideal
//! chain start from the same exact draw of `π` and share momenta. Since the
//! ideal chain stays exactly distributed as `π`, the mean endpoint distance
//! over replicas is an upper bound on `W1(law(X_I), π)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::coupling::ols_slope;
use crate::integrators::{
    exact_gaussian_flow, oracle_step_count, IntegratorSpec, PhasePoint, Scheme,
};
use crate::kernels::{transition, CostLedger, KernelKind, KernelSpec, MomentumSource};
use crate::linalg::dist;
use crate::parallel::{derive_seed, map_replicas};
use crate::potentials::{Gaussian, Potential, SeparablePotential};
use crate::{Error, Result};

/// Halvings of `θ` tried before giving up.
pub const MAX_HALVINGS: u32 = 20;

/// Separable Gaussian family: `block_eigenvalues` repeated to fill `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianFamily {
    pub block_eigenvalues: Vec<f64>,
}

impl GaussianFamily {
    pub fn standard() -> Self {
        Self {
            block_eigenvalues: vec![1.0],
        }
    }

    pub fn block_dim(&self) -> usize {
        self.block_eigenvalues.len()
    }

    pub fn build(&self, dim: usize) -> Result<SeparablePotential> {
        let m = self.block_dim();
        if m == 0 || dim == 0 || !dim.is_multiple_of(m) {
            return Err(Error::invalid(format!(
                "dimension {dim} is not a positive multiple of the block size {m}"
            )));
        }
        let block = std::sync::Arc::new(Gaussian::new(self.block_eigenvalues.clone())?);
        SeparablePotential::replicate(block, dim / m)
    }
}

/// Parameters of [`run_scaling_study`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub family: GaussianFamily,
    pub kind: KernelKind,
    /// `euler` or `leapfrog`.
    pub scheme: String,
    pub dims: Vec<usize>,
    /// Target accuracy on the coupling bound of `W1`.
    pub epsilon: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Constant `c` in `I = ⌈c (M2/m2)² log(M2/(m2 ε))⌉`.
    #[serde(default = "default_c")]
    pub c: f64,
    /// Lower bound on `I`.
    #[serde(default = "default_min_steps")]
    pub min_steps: usize,
}

fn default_c() -> f64 {
    1.0
}

fn default_min_steps() -> usize {
    50
}

impl ScalingConfig {
    pub fn standard(
        scheme: &str,
        dims: Vec<usize>,
        epsilon: f64,
        replicas: usize,
        seed: u64,
    ) -> Self {
        Self {
            family: GaussianFamily::standard(),
            kind: KernelKind::Unadjusted,
            scheme: scheme.to_string(),
            dims,
            epsilon,
            replicas,
            seed,
            c: default_c(),
            min_steps: default_min_steps(),
        }
    }

    fn parsed_scheme(&self) -> Result<(Scheme, u32)> {
        match self.scheme.as_str() {
            "euler" => Ok((Scheme::Euler, 1)),
            "leapfrog" => Ok((Scheme::Leapfrog, 2)),
            other => Err(Error::invalid(format!(
                "scaling study supports euler or leapfrog, got `{other}`"
            ))),
        }
    }

    fn validate(&self) -> Result<()> {
        self.parsed_scheme()?;
        if self.kind == KernelKind::Ideal {
            return Err(Error::invalid("scaling study needs a numerical kernel"));
        }
        if self.dims.is_empty() || self.dims.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "dims must be non-empty and strictly increasing",
            ));
        }
        if !(self.epsilon > 0.0) || self.replicas == 0 || !(self.c > 0.0) {
            return Err(Error::invalid("need epsilon > 0, replicas >= 1 and c > 0"));
        }
        Ok(())
    }
}

/// Kernel steps `I = max(min_steps, ⌈c κ² log(κ/ε)⌉)` with `κ = M2/m2`.
pub fn kernel_steps(c: f64, kappa: f64, epsilon: f64, min_steps: usize) -> usize {
    let raw = (c * kappa * kappa * (kappa / epsilon).ln()).ceil();
    (raw.max(0.0) as usize).max(min_steps)
}

/// One dimension of a [`ScalingResult`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub dim: usize,
    pub theta: f64,
    pub oracle_steps: usize,
    pub kernel_steps: usize,
    /// Gradient evaluations of one chain: `I · n · (evals per oracle call)`.
    pub gradient_evals: u64,
    /// Ledger total over all replicas at the chosen `θ`.
    pub ledger_gradient_evals: u64,
    pub w1: f64,
    /// Number of `θ` values evaluated during the search.
    pub evaluations: usize,
}

/// Per-dimension rows plus the fitted `log(evals)` vs `log(d)` slope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingResult {
    pub scheme: String,
    pub kind: KernelKind,
    pub epsilon: f64,
    pub replicas: usize,
    pub rows: Vec<ScalingRow>,
    pub slope: Option<f64>,
    pub slope_std_error: Option<f64>,
}

struct Evaluation {
    w1: f64,
    ledger: CostLedger,
}

/// Coupling bound on `W1` after `steps` kernel steps with `n` oracle calls
/// landing exactly on `T`.
fn coupled_w1(
    pot: &SeparablePotential,
    kind: KernelKind,
    scheme: Scheme,
    order: u32,
    n: usize,
    time: f64,
    steps: usize,
    replicas: usize,
    seed: u64,
) -> Result<Evaluation> {
    let theta = (time / n as f64).powi(order as i32);
    let spec = KernelSpec::new(kind, IntegratorSpec::new(scheme, theta, time)?)?;
    let eigs = pot
        .gaussian_eigenvalues()
        .ok_or(Error::NotGaussian)?
        .to_vec();
    let covered = spec.integrator.covered_time();
    let d = pot.dim();
    let runs = map_replicas(replicas, |r| -> Result<(f64, CostLedger)> {
        let rep_seed = derive_seed(seed, r as u64);
        let mut start_rng = ChaCha8Rng::seed_from_u64(derive_seed(rep_seed, 1));
        let x0: Vec<f64> = eigs
            .iter()
            .map(|l| {
                let z: f64 = StandardNormal.sample(&mut start_rng);
                z / l.sqrt()
            })
            .collect();
        let mut source = MomentumSource::new(rep_seed, d);
        let mut ledger = CostLedger::default();
        let mut x = x0.clone();
        let mut y = x0;
        for _ in 0..steps {
            let p = source.next_momentum();
            let u = source.next_uniform();
            x = transition(pot, &spec, &x, &p, u, &mut ledger)?.next;
            y = exact_gaussian_flow(&eigs, &PhasePoint { q: y, p }, covered).q;
        }
        Ok((dist(&x, &y), ledger))
    });
    let mut total = 0.0;
    let mut ledger = CostLedger::default();
    for run in runs {
        let (w, l) = run?;
        total += w;
        ledger.merge(&l);
    }
    Ok(Evaluation {
        w1: total / replicas as f64,
        ledger,
    })
}

/// Smallest oracle count (with `θ = (T/n)^k`) whose coupling bound on `W1`
/// is at most `ε`: halve `θ` until the target is met, then binary-search
/// the integer step count between the last failure and the first success.
fn search_dimension(cfg: &ScalingConfig, dim: usize) -> Result<ScalingRow> {
    let (scheme, order) = cfg.parsed_scheme()?;
    let pot = cfg.family.build(dim)?;
    let b = pot.bounds();
    let time = b.default_time();
    let steps = kernel_steps(cfg.c, b.condition_number(), cfg.epsilon, cfg.min_steps);
    let seed = derive_seed(cfg.seed, dim as u64);
    let mut evaluations = 0usize;
    let mut eval = |n: usize| -> Result<Evaluation> {
        evaluations += 1;
        coupled_w1(
            &pot,
            cfg.kind,
            scheme,
            order,
            n,
            time,
            steps,
            cfg.replicas,
            seed,
        )
    };

    let theta0 = time.powi(order as i32);
    let mut fail = 0usize;
    let mut found = None;
    let mut n_prev = 0usize;
    for halving in 0..=MAX_HALVINGS {
        let n = oracle_step_count(time, theta0 / 2f64.powi(halving as i32), order).max(1);
        if n == n_prev {
            continue;
        }
        n_prev = n;
        let e = eval(n)?;
        if e.w1 <= cfg.epsilon {
            found = Some((n, e));
            break;
        }
        fail = n;
    }
    let (mut best_n, mut best) = found.ok_or(Error::SearchExhausted {
        halvings: MAX_HALVINGS,
        epsilon: cfg.epsilon,
        dim,
    })?;
    while best_n - fail > 1 {
        let mid = fail + (best_n - fail) / 2;
        let e = eval(mid)?;
        if e.w1 <= cfg.epsilon {
            best_n = mid;
            best = e;
        } else {
            fail = mid;
        }
    }
    let per_call = if order == 1 { 1 } else { 2 };
    Ok(ScalingRow {
        dim,
        theta: (time / best_n as f64).powi(order as i32),
        oracle_steps: best_n,
        kernel_steps: steps,
        gradient_evals: (steps * best_n) as u64 * per_call,
        ledger_gradient_evals: best.ledger.gradient_evals,
        w1: best.w1,
        evaluations,
    })
}

/// Runs the study for every dimension and fits the log-log slope of
/// gradient evaluations against dimension.
pub fn run_scaling_study(cfg: &ScalingConfig) -> Result<ScalingResult> {
    cfg.validate()?;
    let rows = cfg
        .dims
        .iter()
        .map(|&d| search_dimension(cfg, d))
        .collect::<Result<Vec<_>>>()?;
    let lx: Vec<f64> = rows.iter().map(|r| (r.dim as f64).ln()).collect();
    let ly: Vec<f64> = rows
        .iter()
        .map(|r| (r.gradient_evals as f64).ln())
        .collect();
    let fit = ols_slope(&lx, &ly);
    Ok(ScalingResult {
        scheme: cfg.scheme.clone(),
        kind: cfg.kind,
        epsilon: cfg.epsilon,
        replicas: cfg.replicas,
        rows,
        slope: fit.map(|f| f.0),
        slope_std_error: fit.map(|f| f.1),
    })
}
