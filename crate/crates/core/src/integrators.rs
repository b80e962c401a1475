//! Hamiltonian flow maps.
//!
//! The numerical integrators follow the "oracle + composition" layout: an
//! oracle (Euler or leapfrog) advances the phase point by one small step at
//! accuracy `θ`, and [`integrate`] applies it `⌈T / θ^(1/k)⌉` times, where
//! `k` is the order of the oracle. The leapfrog oracle therefore moves with
//! step length `√θ`.

use serde::{Deserialize, Serialize};

use crate::linalg::{axpy, dist, norm, norm_sq};
use crate::potentials::Potential;
use crate::{Error, Result};

/// Position and momentum in `R^d × R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: q.len(),
                actual: p.len(),
            });
        }
        Ok(Self { q, p })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn hamiltonian(&self, pot: &dyn Potential) -> f64 {
        hamiltonian(pot, &self.q, &self.p)
    }
}

/// `H(q, p) = U(q) + ½‖p‖²`.
pub fn hamiltonian(pot: &dyn Potential, q: &[f64], p: &[f64]) -> f64 {
    pot.value(q) + 0.5 * norm_sq(p)
}

/// The good set `G = {max_i ‖q^(i)‖ < g_inf, max_i ‖p^(i)‖ < g_inf, ‖p‖ > g_2}`
/// over blocks of size `block_dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodSetSpec {
    pub g_inf: f64,
    pub g_2: f64,
    pub block_dim: usize,
}

impl GoodSetSpec {
    /// `g_inf = 10√m`, `g_2 = √d / 2`.
    pub fn with_defaults(dim: usize, block_dim: usize) -> Self {
        Self {
            g_inf: 10.0 * (block_dim as f64).sqrt(),
            g_2: (dim as f64).sqrt() / 2.0,
            block_dim,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.block_dim == 0 || !dim.is_multiple_of(self.block_dim) {
            return Err(Error::invalid(format!(
                "good-set block size {} does not divide dimension {dim}",
                self.block_dim
            )));
        }
        if !(self.g_inf > 0.0) || self.g_2.is_nan() || self.g_2 < 0.0 {
            return Err(Error::invalid("good set needs g_inf > 0 and g_2 >= 0"));
        }
        Ok(())
    }

    pub fn contains(&self, q: &[f64], p: &[f64]) -> bool {
        let m = self.block_dim;
        q.chunks(m).all(|b| norm(b) < self.g_inf)
            && p.chunks(m).all(|b| norm(b) < self.g_inf)
            && norm(p) > self.g_2
    }
}

/// Which flow map an [`IntegratorSpec`] denotes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Closed-form flow; Gaussian potentials only.
    ExactGaussian,
    Euler,
    Leapfrog,
    /// Leapfrog refined until successive end points differ by less than `tol`.
    Reference {
        tol: f64,
    },
    /// Leapfrog inside the good set, Euler outside it.
    Guarded(GoodSetSpec),
}

impl Scheme {
    /// Order `k` of the oracle, for the composed schemes.
    pub fn order(&self) -> Option<u32> {
        match self {
            Scheme::Euler => Some(1),
            Scheme::Leapfrog | Scheme::Guarded(_) => Some(2),
            Scheme::ExactGaussian | Scheme::Reference { .. } => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::ExactGaussian => "exact_gaussian",
            Scheme::Euler => "euler",
            Scheme::Leapfrog => "leapfrog",
            Scheme::Reference { .. } => "reference",
            Scheme::Guarded(_) => "guarded",
        }
    }
}

/// Gradient evaluations made by one call of an oracle.
pub const EULER_GRADS_PER_CALL: u64 = 1;
pub const LEAPFROG_GRADS_PER_CALL: u64 = 2;

/// One numerical flow map: scheme, accuracy `θ` and integration time `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSpec {
    pub scheme: Scheme,
    pub theta: f64,
    pub time: f64,
}

impl IntegratorSpec {
    pub fn new(scheme: Scheme, theta: f64, time: f64) -> Result<Self> {
        let spec = Self {
            scheme,
            theta,
            time,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn exact(time: f64) -> Self {
        Self {
            scheme: Scheme::ExactGaussian,
            theta: 1.0,
            time,
        }
    }

    pub fn euler(theta: f64, time: f64) -> Result<Self> {
        Self::new(Scheme::Euler, theta, time)
    }

    pub fn leapfrog(theta: f64, time: f64) -> Result<Self> {
        Self::new(Scheme::Leapfrog, theta, time)
    }

    pub fn reference(tol: f64, time: f64) -> Result<Self> {
        Self::new(Scheme::Reference { tol }, tol, time)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.time.is_finite() && self.time >= 0.0) {
            return Err(Error::invalid(format!(
                "integration time must be >= 0, got {}",
                self.time
            )));
        }
        if self.scheme.order().is_some() && !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(Error::invalid(format!(
                "accuracy theta must be > 0, got {}",
                self.theta
            )));
        }
        if let Scheme::Reference { tol } = self.scheme {
            if !(tol > 0.0) {
                return Err(Error::invalid("reference tolerance must be > 0"));
            }
        }
        Ok(())
    }

    pub fn order(&self) -> Option<u32> {
        self.scheme.order()
    }

    /// Length `θ^(1/k)` of one oracle step.
    pub fn step_length(&self) -> Option<f64> {
        self.order().map(|k| oracle_step_length(self.theta, k))
    }

    /// Number of oracle calls `⌈T / θ^(1/k)⌉`.
    pub fn oracle_steps(&self) -> Option<usize> {
        self.order()
            .map(|k| oracle_step_count(self.time, self.theta, k))
    }

    /// Gradient evaluations made per integration, when fixed in advance.
    pub fn gradient_evals_per_call(&self) -> Option<u64> {
        match self.scheme {
            Scheme::Euler => Some(EULER_GRADS_PER_CALL * self.oracle_steps()? as u64),
            Scheme::Leapfrog => Some(LEAPFROG_GRADS_PER_CALL * self.oracle_steps()? as u64),
            Scheme::ExactGaussian => Some(0),
            _ => None,
        }
    }

    /// Time actually covered: the last oracle step is taken at full length,
    /// so this can exceed `T` by less than one step.
    pub fn covered_time(&self) -> f64 {
        match (self.step_length(), self.oracle_steps()) {
            (Some(h), Some(n)) => h * n as f64,
            _ => self.time,
        }
    }
}

pub fn oracle_step_length(theta: f64, order: u32) -> f64 {
    match order {
        1 => theta,
        2 => theta.sqrt(),
        k => theta.powf(1.0 / k as f64),
    }
}

/// `⌈T / θ^(1/k)⌉`, with a relative guard of a few ulps so that ratios like
/// `T / (T/7)` that land a hair above an integer are not rounded up.
pub fn oracle_step_count(time: f64, theta: f64, order: u32) -> usize {
    let ratio = time / oracle_step_length(theta, order);
    let guarded = ratio * (1.0 - 4.0 * f64::EPSILON);
    guarded.ceil().max(0.0) as usize
}

/// Euler oracle: `(q + θp, p − θU'(q))`.
pub fn euler_step(pot: &dyn Potential, x: &PhasePoint, theta: f64) -> PhasePoint {
    let mut out = x.clone();
    let mut g = vec![0.0; x.dim()];
    euler_in_place(pot, &mut out.q, &mut out.p, theta, &mut g);
    out
}

/// Leapfrog oracle with internal step `√θ`:
/// half kick, drift, half kick.
pub fn leapfrog_step(pot: &dyn Potential, x: &PhasePoint, theta: f64) -> PhasePoint {
    let mut out = x.clone();
    let mut g = vec![0.0; x.dim()];
    leapfrog_in_place(pot, &mut out.q, &mut out.p, theta.sqrt(), &mut g);
    out
}

#[inline]
pub(crate) fn euler_in_place(
    pot: &dyn Potential,
    q: &mut [f64],
    p: &mut [f64],
    h: f64,
    g: &mut [f64],
) {
    pot.gradient_into(q, g);
    axpy(h, p, q);
    axpy(-h, g, p);
}

#[inline]
pub(crate) fn leapfrog_in_place(
    pot: &dyn Potential,
    q: &mut [f64],
    p: &mut [f64],
    h: f64,
    g: &mut [f64],
) {
    pot.gradient_into(q, g);
    axpy(-0.5 * h, g, p);
    axpy(h, p, q);
    pot.gradient_into(q, g);
    axpy(-0.5 * h, g, p);
}

/// End point of an integration together with its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub end: PhasePoint,
    pub oracle_calls: u64,
    pub gradient_evals: u64,
}

/// Applies the flow map described by `spec` to `x`.
pub fn integrate(pot: &dyn Potential, spec: &IntegratorSpec, x: &PhasePoint) -> Result<Flow> {
    spec.validate()?;
    check_dim(pot, x)?;
    match spec.scheme {
        Scheme::ExactGaussian => {
            let eigs = pot.gaussian_eigenvalues().ok_or(Error::NotGaussian)?;
            Ok(Flow {
                end: exact_gaussian_flow(eigs, x, spec.time),
                oracle_calls: 0,
                gradient_evals: 0,
            })
        }
        Scheme::Euler | Scheme::Leapfrog => Ok(compose(pot, spec.scheme, spec.theta, spec.time, x)),
        Scheme::Reference { tol } => reference_flow(pot, x, spec.time, tol),
        Scheme::Guarded(good) => guarded_step(pot, spec.theta, spec.time, &good, x),
    }
}

fn compose(pot: &dyn Potential, scheme: Scheme, theta: f64, time: f64, x: &PhasePoint) -> Flow {
    let mut q = x.q.clone();
    let mut p = x.p.clone();
    let mut g = vec![0.0; q.len()];
    let (n, per_call) = match scheme {
        Scheme::Euler => {
            let n = oracle_step_count(time, theta, 1);
            for _ in 0..n {
                euler_in_place(pot, &mut q, &mut p, theta, &mut g);
            }
            (n, EULER_GRADS_PER_CALL)
        }
        Scheme::Leapfrog => {
            let n = oracle_step_count(time, theta, 2);
            let h = theta.sqrt();
            for _ in 0..n {
                leapfrog_in_place(pot, &mut q, &mut p, h, &mut g);
            }
            (n, LEAPFROG_GRADS_PER_CALL)
        }
        _ => unreachable!("compose is only called for oracle schemes"),
    };
    Flow {
        end: PhasePoint { q, p },
        oracle_calls: n as u64,
        gradient_evals: n as u64 * per_call,
    }
}

fn check_dim(pot: &dyn Potential, x: &PhasePoint) -> Result<()> {
    if x.q.len() != pot.dim() || x.p.len() != pot.dim() {
        return Err(Error::DimensionMismatch {
            expected: pot.dim(),
            actual: if x.q.len() != pot.dim() {
                x.q.len()
            } else {
                x.p.len()
            },
        });
    }
    Ok(())
}

/// Closed-form flow of `½ Σ λ_i q_i²`:
/// `q_T = q cos(ωT) + (p/ω) sin(ωT)`, `p_T = −qω sin(ωT) + p cos(ωT)`, `ω = √λ`.
pub fn exact_gaussian_flow(eigs: &[f64], x: &PhasePoint, time: f64) -> PhasePoint {
    let mut q = Vec::with_capacity(x.dim());
    let mut p = Vec::with_capacity(x.dim());
    for ((&l, &q0), &p0) in eigs.iter().zip(&x.q).zip(&x.p) {
        let w = l.sqrt();
        let (s, c) = (w * time).sin_cos();
        q.push(q0 * c + p0 / w * s);
        p.push(-q0 * w * s + p0 * c);
    }
    PhasePoint { q, p }
}

/// Halvings allowed before [`reference_flow`] gives up.
pub const REFERENCE_MAX_HALVINGS: u32 = 20;
/// Default tolerance of the reference flow.
pub const REFERENCE_DEFAULT_TOL: f64 = 1e-10;
const REFERENCE_INITIAL_STEPS: usize = 8;
const STAGNATION_FLOOR: f64 = 1e-9;

/// High-resolution stand-in for the exact flow: leapfrog with step `T/n`,
/// `n` doubling until successive end positions differ by less than `tol`.
pub fn reference_flow(pot: &dyn Potential, x: &PhasePoint, time: f64, tol: f64) -> Result<Flow> {
    let (mut points, evals, calls) = reference_checkpoints(pot, x, time, 1, tol)?;
    Ok(Flow {
        end: points.pop().expect("at least one checkpoint"),
        oracle_calls: calls,
        gradient_evals: evals,
    })
}

/// Converged reference flow sampled at `t_k = kT/checkpoints`, `k = 0..=checkpoints`.
pub fn reference_trajectory(
    pot: &dyn Potential,
    x: &PhasePoint,
    time: f64,
    checkpoints: usize,
    tol: f64,
) -> Result<Vec<PhasePoint>> {
    reference_checkpoints(pot, x, time, checkpoints, tol).map(|(p, _, _)| p)
}

fn reference_checkpoints(
    pot: &dyn Potential,
    x: &PhasePoint,
    time: f64,
    checkpoints: usize,
    tol: f64,
) -> Result<(Vec<PhasePoint>, u64, u64)> {
    check_dim(pot, x)?;
    if !(tol > 0.0) {
        return Err(Error::invalid("reference tolerance must be > 0"));
    }
    let checkpoints = checkpoints.max(1);
    if time == 0.0 {
        return Ok((vec![x.clone(); checkpoints + 1], 0, 0));
    }
    let mut evals = 0u64;
    let mut calls = 0u64;
    let mut per_segment = REFERENCE_INITIAL_STEPS;
    let mut prev = leapfrog_grid(pot, x, time, checkpoints, per_segment);
    evals += (checkpoints * per_segment) as u64 * LEAPFROG_GRADS_PER_CALL;
    calls += (checkpoints * per_segment) as u64;
    let mut change = f64::INFINITY;
    let mut last_change = f64::INFINITY;
    for halving in 0..REFERENCE_MAX_HALVINGS {
        per_segment *= 2;
        let next = leapfrog_grid(pot, x, time, checkpoints, per_segment);
        evals += (checkpoints * per_segment) as u64 * LEAPFROG_GRADS_PER_CALL;
        calls += (checkpoints * per_segment) as u64;
        change = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| dist(&a.q, &b.q))
            .fold(0.0, f64::max);
        if !change.is_finite() {
            return Err(Error::NonFinite("reference flow diverged".into()));
        }
        prev = next;
        if change < tol {
            return Ok((prev, evals, calls));
        }
        // Past the rounding floor further refinement stops paying off.
        if change < STAGNATION_FLOOR && change > 0.5 * last_change {
            return Err(Error::NotConverged {
                halvings: halving + 1,
                last_change: change,
            });
        }
        last_change = change;
    }
    Err(Error::NotConverged {
        halvings: REFERENCE_MAX_HALVINGS,
        last_change: change,
    })
}

fn leapfrog_grid(
    pot: &dyn Potential,
    x: &PhasePoint,
    time: f64,
    checkpoints: usize,
    per_segment: usize,
) -> Vec<PhasePoint> {
    let h = time / (checkpoints * per_segment) as f64;
    let mut q = x.q.clone();
    let mut p = x.p.clone();
    let mut g = vec![0.0; q.len()];
    let mut out = Vec::with_capacity(checkpoints + 1);
    out.push(x.clone());
    for _ in 0..checkpoints {
        for _ in 0..per_segment {
            leapfrog_in_place(pot, &mut q, &mut p, h, &mut g);
        }
        out.push(PhasePoint {
            q: q.clone(),
            p: p.clone(),
        });
    }
    out
}

/// The "ideal" flow: closed form for Gaussians, reference flow otherwise.
pub fn ideal_flow(pot: &dyn Potential, x: &PhasePoint, time: f64, tol: f64) -> Result<Flow> {
    match pot.gaussian_eigenvalues() {
        Some(eigs) => Ok(Flow {
            end: exact_gaussian_flow(eigs, x, time),
            oracle_calls: 0,
            gradient_evals: 0,
        }),
        None => reference_flow(pot, x, time, tol),
    }
}

/// Toy integrator: the leapfrog composition when `x` lies in the good set,
/// the Euler composition (same `θ`, `k = 1`) otherwise.
pub fn guarded_step(
    pot: &dyn Potential,
    theta: f64,
    time: f64,
    good: &GoodSetSpec,
    x: &PhasePoint,
) -> Result<Flow> {
    check_dim(pot, x)?;
    good.validate(pot.dim())?;
    let scheme = if good.contains(&x.q, &x.p) {
        Scheme::Leapfrog
    } else {
        Scheme::Euler
    };
    Ok(compose(pot, scheme, theta, time, x))
}

/// `|H(integrate(x)) − H(x)|`.
pub fn energy_error(pot: &dyn Potential, spec: &IntegratorSpec, x: &PhasePoint) -> Result<f64> {
    let end = integrate(pot, spec, x)?.end;
    Ok((end.hamiltonian(pot) - x.hamiltonian(pot)).abs())
}

/// Samples of a trajectory `(t, q, p)`; one row per oracle call for the
/// composed schemes, `samples` evenly spaced rows otherwise.
pub fn trajectory(
    pot: &dyn Potential,
    spec: &IntegratorSpec,
    x: &PhasePoint,
    samples: usize,
) -> Result<Vec<(f64, PhasePoint)>> {
    spec.validate()?;
    check_dim(pot, x)?;
    let samples = samples.max(1);
    match spec.scheme {
        Scheme::Euler | Scheme::Leapfrog | Scheme::Guarded(_) => {
            let scheme = match spec.scheme {
                Scheme::Guarded(good) if !good.contains(&x.q, &x.p) => Scheme::Euler,
                Scheme::Guarded(_) => Scheme::Leapfrog,
                s => s,
            };
            let k = scheme.order().expect("oracle scheme");
            let h = oracle_step_length(spec.theta, k);
            let n = oracle_step_count(spec.time, spec.theta, k);
            let mut q = x.q.clone();
            let mut p = x.p.clone();
            let mut g = vec![0.0; q.len()];
            let mut rows = vec![(0.0, x.clone())];
            for i in 1..=n {
                if k == 1 {
                    euler_in_place(pot, &mut q, &mut p, h, &mut g);
                } else {
                    leapfrog_in_place(pot, &mut q, &mut p, h, &mut g);
                }
                rows.push((
                    i as f64 * h,
                    PhasePoint {
                        q: q.clone(),
                        p: p.clone(),
                    },
                ));
            }
            Ok(rows)
        }
        Scheme::ExactGaussian => {
            let eigs = pot.gaussian_eigenvalues().ok_or(Error::NotGaussian)?;
            Ok((0..=samples)
                .map(|i| {
                    let t = spec.time * i as f64 / samples as f64;
                    (t, exact_gaussian_flow(eigs, x, t))
                })
                .collect())
        }
        Scheme::Reference { tol } => {
            let pts = reference_trajectory(pot, x, spec.time, samples, tol)?;
            Ok(pts
                .into_iter()
                .enumerate()
                .map(|(i, pt)| (spec.time * i as f64 / samples as f64, pt))
                .collect())
        }
    }
}
