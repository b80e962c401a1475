//! Verification lab: synchronous couplings, contraction certificates,
//! trajectory comparison bounds, drift estimates and good-set exit statistics.
//!
//! Every Monte Carlo routine derives one seed per replica from the caller's
//! seed, so reports do not depend on the worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::bounds::{
    contraction_factor, coupling_rate, displacement_bound, divergence_bound, euler_energy_bound,
    euler_position_bound, log_drift_rhs, lower_sandwich, max_contraction_time, upper_sandwich,
};
use crate::integrators::{
    ideal_flow, integrate, reference_flow, reference_trajectory, GoodSetSpec, IntegratorSpec,
    PhasePoint, Scheme,
};
use crate::kernels::{transition, CostLedger, KernelKind, KernelSpec, MomentumSource};
use crate::linalg::{dist, norm};
use crate::parallel::{derive_seed, map_replicas};
use crate::potentials::{uniform_in_ball, uniform_on_sphere, Potential, SeparablePotential};
use crate::{Error, Result};

/// Distances at or below this are treated as exact coalescence.
pub const DISTANCE_FLOOR: f64 = 1e-12;
/// Additive slack on each per-step contraction check.
pub const STEP_SLACK: f64 = 1e-9;
/// Slack on the ratio certificates.
pub const CERTIFICATE_SLACK: f64 = 1e-6;

fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

fn check_start(pot: &dyn Potential, x: &[f64]) -> Result<()> {
    if x.len() != pot.dim() {
        return Err(Error::DimensionMismatch {
            expected: pot.dim(),
            actual: x.len(),
        });
    }
    Ok(())
}

/// Least-squares slope of `ys` against `xs` with its standard error.
/// Returns `None` with fewer than two points or no spread in `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let se = if n > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
            .sum();
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Some((slope, se))
}

/// Outcome of [`couple_synchronous`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingReport {
    /// `‖X_i − Y_i‖` for `i = 0..=steps`.
    pub distances: Vec<f64>,
    /// `exp` of the least-squares slope of `log d_i` over the steps with
    /// `d_i > DISTANCE_FLOOR`; `None` if fewer than two such steps.
    pub fitted_rate: Option<f64>,
    /// `1 − (m2/M2)² / 64`.
    pub bound: f64,
    /// Steps with `d_{i+1} > bound · d_i + STEP_SLACK`; counted for the ideal
    /// kernel only.
    pub violations: Option<usize>,
    pub ledger: CostLedger,
}

impl CouplingReport {
    /// True when no step violated the bound and the fitted rate is within it.
    pub fn pass(&self) -> bool {
        self.violations.unwrap_or(0) == 0 && self.fitted_rate.is_none_or(|r| r <= self.bound)
    }
}

/// Runs two chains from `x0` and `y0` on one momentum source and records
/// their distance after every step.
pub fn couple_synchronous(
    pot: &dyn Potential,
    spec: &KernelSpec,
    x0: &[f64],
    y0: &[f64],
    steps: usize,
    seed: u64,
) -> Result<CouplingReport> {
    check_start(pot, x0)?;
    check_start(pot, y0)?;
    let d0 = dist(x0, y0);
    if d0 <= DISTANCE_FLOOR {
        return Err(Error::DegenerateCoupling);
    }
    let b = pot.bounds();
    let bound = coupling_rate(b.m2, b.big_m2);
    let mut source = MomentumSource::new(seed, pot.dim());
    let mut ledger = CostLedger::default();
    let (mut x, mut y) = (x0.to_vec(), y0.to_vec());
    let mut distances = Vec::with_capacity(steps + 1);
    distances.push(d0);
    for _ in 0..steps {
        let p = source.next_momentum();
        let u = source.next_uniform();
        x = transition(pot, spec, &x, &p, u, &mut ledger)?.next;
        y = transition(pot, spec, &y, &p, u, &mut ledger)?.next;
        distances.push(dist(&x, &y));
    }
    let violations = (spec.kind == KernelKind::Ideal).then(|| {
        distances
            .windows(2)
            .filter(|w| w[1] > bound * w[0] + STEP_SLACK)
            .count()
    });
    let live: Vec<f64> = distances
        .iter()
        .take_while(|&&d| d > DISTANCE_FLOOR)
        .map(|d| d.ln())
        .collect();
    let steps_axis: Vec<f64> = (0..live.len()).map(|i| i as f64).collect();
    let fitted_rate = ols_slope(&steps_axis, &live).map(|(s, _)| s.exp());
    Ok(CouplingReport {
        distances,
        fitted_rate,
        bound,
        violations,
        ledger,
    })
}

/// Outcome of [`contraction_certificate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub trials: usize,
    /// Largest observed `q̂_T / q̂_0`.
    pub worst_ratio: f64,
    /// `1 − (√m2 T)² / 8`.
    pub contraction: f64,
    pub pass: bool,
}

fn check_contraction_time(pot: &dyn Potential, time: f64) -> Result<f64> {
    let b = pot.bounds();
    let t_max = max_contraction_time(b.m2, b.big_m2);
    if !(time >= 0.0 && time <= t_max * (1.0 + 1e-12)) {
        return Err(Error::invalid(format!(
            "integration time {time} outside [0, {t_max}] covered by the contraction bound"
        )));
    }
    Ok(t_max)
}

/// Start pair with a shared momentum: positions uniform in the ball of
/// radius `√(d/m2)` about the minimizer, momentum standard Gaussian.
fn shared_momentum_pair(pot: &dyn Potential, rng: &mut ChaCha8Rng) -> (PhasePoint, PhasePoint) {
    let d = pot.dim();
    let radius = (d as f64 / pot.bounds().m2).sqrt();
    let centre = pot.minimizer();
    let shift = |v: Vec<f64>| -> Vec<f64> { v.iter().zip(&centre).map(|(a, c)| a + c).collect() };
    let q1 = shift(uniform_in_ball(rng, d, radius));
    let q2 = shift(uniform_in_ball(rng, d, radius));
    let p = gaussian_vec(rng, d);
    (
        PhasePoint {
            q: q1,
            p: p.clone(),
        },
        PhasePoint { q: q2, p },
    )
}

/// Integrates random position pairs with shared momenta for time `T` with
/// the reference flow and reports the worst contraction ratio.
pub fn contraction_certificate(
    pot: &dyn Potential,
    time: f64,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<CertificateReport> {
    check_contraction_time(pot, time)?;
    if trials == 0 {
        return Err(Error::invalid("certificate needs at least one trial"));
    }
    let ratios = map_replicas(trials, |i| -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
        let (a, b) = shared_momentum_pair(pot, &mut rng);
        let q0 = dist(&a.q, &b.q);
        if q0 == 0.0 {
            return Ok(0.0);
        }
        let ea = reference_flow(pot, &a, time, tol)?.end;
        let eb = reference_flow(pot, &b, time, tol)?.end;
        Ok(dist(&ea.q, &eb.q) / q0)
    });
    let mut worst = 0.0f64;
    for r in ratios {
        worst = worst.max(r?);
    }
    let b = pot.bounds();
    let contraction = contraction_factor(time, b.m2);
    Ok(CertificateReport {
        trials,
        worst_ratio: worst,
        contraction,
        pass: worst <= contraction + CERTIFICATE_SLACK,
    })
}

/// Outcome of a pathwise comparison against a closed-form bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheckReport {
    /// Number of (trajectory, time) evaluations.
    pub evaluations: usize,
    /// Evaluations exceeding the bound by more than the slack.
    pub violations: usize,
    /// Largest `observed − bound`, in the units of the bound.
    pub worst_excess: f64,
}

impl BoundCheckReport {
    fn merge(mut self, other: BoundCheckReport) -> Self {
        self.evaluations += other.evaluations;
        self.violations += other.violations;
        self.worst_excess = self.worst_excess.max(other.worst_excess);
        self
    }

    fn empty() -> Self {
        Self {
            evaluations: 0,
            violations: 0,
            worst_excess: f64::NEG_INFINITY,
        }
    }

    fn record(&mut self, observed: f64, bound: f64, slack: f64) {
        self.evaluations += 1;
        let excess = observed - bound;
        self.worst_excess = self.worst_excess.max(excess);
        if excess > slack {
            self.violations += 1;
        }
    }

    pub fn pass(&self) -> bool {
        self.violations == 0
    }
}

fn interior_times(time: f64, count: usize) -> Vec<f64> {
    (0..=count + 1)
        .map(|k| time * k as f64 / (count + 1) as f64)
        .collect()
}

fn fold_reports(reports: Vec<Result<BoundCheckReport>>) -> Result<BoundCheckReport> {
    let mut acc = BoundCheckReport::empty();
    for r in reports {
        acc = acc.merge(r?);
    }
    Ok(acc)
}

/// Upper and lower halves of the contraction sandwich check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub upper: BoundCheckReport,
    pub lower: BoundCheckReport,
}

impl SandwichReport {
    pub fn pass(&self) -> bool {
        self.upper.pass() && self.lower.pass()
    }
}

/// Checks `ψ(t) ≤ q̂_t / q̂_0 ≤ Ψ_T(t)` at `times` interior points of
/// `[0, T]` for random pairs sharing a momentum.
pub fn sandwich_check(
    pot: &dyn Potential,
    time: f64,
    pairs: usize,
    times: usize,
    seed: u64,
    tol: f64,
) -> Result<SandwichReport> {
    check_contraction_time(pot, time)?;
    let b = pot.bounds();
    let grid = interior_times(time, times);
    let reports = map_replicas(pairs, |i| -> Result<(BoundCheckReport, BoundCheckReport)> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
        let (a, c) = shared_momentum_pair(pot, &mut rng);
        let q0 = dist(&a.q, &c.q);
        let ta = reference_trajectory(pot, &a, time, times + 1, tol)?;
        let tc = reference_trajectory(pot, &c, time, times + 1, tol)?;
        let mut upper = BoundCheckReport::empty();
        let mut lower = BoundCheckReport::empty();
        for k in 1..=times {
            let ratio = dist(&ta[k].q, &tc[k].q) / q0;
            let t = grid[k];
            upper.record(
                ratio,
                upper_sandwich(t, time, b.m2, b.big_m2),
                CERTIFICATE_SLACK,
            );
            lower.record(lower_sandwich(t, b.big_m2), ratio, CERTIFICATE_SLACK);
        }
        Ok((upper, lower))
    });
    let mut upper = BoundCheckReport::empty();
    let mut lower = BoundCheckReport::empty();
    for r in reports {
        let (u, l) = r?;
        upper = upper.merge(u);
        lower = lower.merge(l);
    }
    Ok(SandwichReport { upper, lower })
}

/// Checks `‖q_t − q'_t‖ ≤ k1 e^{t√M2} + k2 e^{−t√M2}` for independent
/// positions and momenta at `times` interior points of `[0, T]`.
pub fn divergence_check(
    pot: &dyn Potential,
    time: f64,
    pairs: usize,
    times: usize,
    seed: u64,
    tol: f64,
) -> Result<BoundCheckReport> {
    let big_m2 = pot.bounds().big_m2;
    let d = pot.dim();
    let radius = (d as f64 / pot.bounds().m2).sqrt();
    let grid = interior_times(time, times);
    fold_reports(map_replicas(pairs, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
        let a = PhasePoint {
            q: uniform_in_ball(&mut rng, d, radius),
            p: gaussian_vec(&mut rng, d),
        };
        let c = PhasePoint {
            q: uniform_in_ball(&mut rng, d, radius),
            p: gaussian_vec(&mut rng, d),
        };
        let (q0, p0) = (dist(&a.q, &c.q), dist(&a.p, &c.p));
        let ta = reference_trajectory(pot, &a, time, times + 1, tol)?;
        let tc = reference_trajectory(pot, &c, time, times + 1, tol)?;
        let mut r = BoundCheckReport::empty();
        for k in 1..=times {
            let bound = divergence_bound(grid[k], q0, p0, big_m2);
            r.record(
                dist(&ta[k].q, &tc[k].q),
                bound,
                CERTIFICATE_SLACK * bound.max(1.0),
            );
        }
        Ok(r)
    }))
}

/// Checks the small-time displacement bound on `‖q_t − q_0‖` with `C = M2`.
pub fn displacement_check(
    pot: &dyn Potential,
    time: f64,
    starts: usize,
    times: usize,
    seed: u64,
    tol: f64,
) -> Result<BoundCheckReport> {
    let c = pot.bounds().big_m2;
    let d = pot.dim();
    let radius = (d as f64 / pot.bounds().m2).sqrt();
    let grid = interior_times(time, times);
    fold_reports(map_replicas(starts, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
        let x = PhasePoint {
            q: uniform_in_ball(&mut rng, d, radius),
            p: gaussian_vec(&mut rng, d),
        };
        let traj = reference_trajectory(pot, &x, time, times + 1, tol)?;
        let (qn, pn) = (norm(&x.q), norm(&x.p));
        let mut r = BoundCheckReport::empty();
        for k in 1..=times {
            let bound = displacement_bound(grid[k], qn, pn, c);
            r.record(
                dist(&traj[k].q, &x.q),
                bound,
                CERTIFICATE_SLACK * bound.max(1.0),
            );
        }
        Ok(r)
    }))
}

/// Outcome of [`euler_bound_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerBoundReport {
    pub starts: usize,
    pub energy_violations: usize,
    pub position_violations: usize,
    /// Largest observed `|ΔH| / (7 (θ/T) H)`.
    pub worst_energy_ratio: f64,
    /// Largest observed position error over `6 θ T (M2/√m2) √H`.
    pub worst_position_ratio: f64,
}

impl EulerBoundReport {
    pub fn pass(&self) -> bool {
        self.energy_violations == 0 && self.position_violations == 0
    }
}

/// Random start with `H ≤ 10d`: `q` uniform in the ball `(M2/2)‖q‖² ≤ 5d`
/// about the minimizer, `p` uniform in the ball `½‖p‖² ≤ 5d`.
pub fn bounded_energy_start(pot: &dyn Potential, rng: &mut ChaCha8Rng) -> PhasePoint {
    let d = pot.dim();
    let budget = 5.0 * d as f64;
    let centre = pot.minimizer();
    let q: Vec<f64> = uniform_in_ball(rng, d, (2.0 * budget / pot.bounds().big_m2).sqrt())
        .iter()
        .zip(&centre)
        .map(|(a, c)| a + c)
        .collect();
    let p = uniform_in_ball(rng, d, (2.0 * budget).sqrt());
    PhasePoint { q, p }
}

/// Compares the Euler composition with the ideal flow from random starts
/// with `H ≤ 10d`. Requires `7θ ≤ T ≤ √m2/(2√2 M2)` and `T/θ` integral.
pub fn euler_bound_check(
    pot: &dyn Potential,
    theta: f64,
    time: f64,
    starts: usize,
    seed: u64,
    tol: f64,
) -> Result<EulerBoundReport> {
    check_contraction_time(pot, time)?;
    if !(7.0 * theta <= time) {
        return Err(Error::invalid(format!(
            "need 7θ <= T, got θ = {theta}, T = {time}"
        )));
    }
    let ratio = time / theta;
    if (ratio - ratio.round()).abs() > 1e-9 * ratio {
        return Err(Error::invalid(format!("T/θ = {ratio} must be an integer")));
    }
    let spec = IntegratorSpec::euler(theta, time)?;
    let b = pot.bounds();
    let rows = map_replicas(starts, |i| -> Result<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
        let x = bounded_energy_start(pot, &mut rng);
        let h = x.hamiltonian(pot);
        let euler = integrate(pot, &spec, &x)?.end;
        let ideal = ideal_flow(pot, &x, time, tol)?.end;
        let de = (euler.hamiltonian(pot) - h).abs() / euler_energy_bound(theta, time, h);
        let dq = dist(&euler.q, &ideal.q) / euler_position_bound(theta, time, b.m2, b.big_m2, h);
        Ok((de, dq))
    });
    let mut report = EulerBoundReport {
        starts,
        energy_violations: 0,
        position_violations: 0,
        worst_energy_ratio: 0.0,
        worst_position_ratio: 0.0,
    };
    for r in rows {
        let (de, dq) = r?;
        report.energy_violations += usize::from(!(de <= 1.0));
        report.position_violations += usize::from(!(dq <= 1.0));
        report.worst_energy_ratio = report.worst_energy_ratio.max(de);
        report.worst_position_ratio = report.worst_position_ratio.max(dq);
    }
    Ok(report)
}

/// Errors of one integrator at one accuracy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderPoint {
    pub theta: f64,
    /// Largest end-point position error over the starts.
    pub position_error: f64,
    /// Largest end-point energy error over the starts.
    pub energy_error: f64,
}

/// Convergence-order study: errors on a grid of `θ` and their log-log slopes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderStudy {
    pub points: Vec<OrderPoint>,
    pub position_slope: f64,
    pub energy_slope: f64,
    /// Condition constants `(K, c)` such that every observed position error
    /// is at most `θ K (H^c + 1)`.
    pub condition_constants: (f64, f64),
}

/// Runs leapfrog with `θ = (T/n)²` for each `n` in `step_counts`, so the
/// composition lands on `T` exactly, and measures errors against the ideal
/// flow over `starts` random starts with `H ≤ 10d`.
pub fn leapfrog_order_study(
    pot: &dyn Potential,
    time: f64,
    step_counts: &[usize],
    starts: usize,
    seed: u64,
    tol: f64,
) -> Result<OrderStudy> {
    if step_counts.len() < 2 || starts == 0 {
        return Err(Error::invalid(
            "order study needs two step counts and one start",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<PhasePoint> = (0..starts)
        .map(|_| bounded_energy_start(pot, &mut rng))
        .collect();
    let ideal: Vec<PhasePoint> = xs
        .iter()
        .map(|x| ideal_flow(pot, x, time, tol).map(|f| f.end))
        .collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(step_counts.len());
    let mut samples = Vec::new();
    for &n in step_counts {
        if n == 0 {
            return Err(Error::invalid("step counts must be positive"));
        }
        let theta = (time / n as f64).powi(2);
        let spec = IntegratorSpec::new(Scheme::Leapfrog, theta, time)?;
        let mut pos = 0.0f64;
        let mut en = 0.0f64;
        for (x, exact) in xs.iter().zip(&ideal) {
            let end = integrate(pot, &spec, x)?.end;
            let h = x.hamiltonian(pot);
            let e = dist(&end.q, &exact.q);
            pos = pos.max(e);
            en = en.max((end.hamiltonian(pot) - h).abs());
            samples.push((theta, h, e));
        }
        points.push(OrderPoint {
            theta,
            position_error: pos,
            energy_error: en,
        });
    }
    let lt: Vec<f64> = points.iter().map(|p| p.theta.ln()).collect();
    let lp: Vec<f64> = points.iter().map(|p| p.position_error.ln()).collect();
    let le: Vec<f64> = points.iter().map(|p| p.energy_error.ln()).collect();
    let position_slope = ols_slope(&lt, &lp).map_or(f64::NAN, |s| s.0);
    let energy_slope = ols_slope(&lt, &le).map_or(f64::NAN, |s| s.0);
    Ok(OrderStudy {
        points,
        position_slope,
        energy_slope,
        condition_constants: fit_condition_constants(&samples),
    })
}

/// Fits `(K, c)` with `error ≤ θ K (H^c + 1)` on every sample `(θ, H, error)`.
/// `c` is chosen on a grid in `[0, 3]` to minimize the summed bound, and `K`
/// is the smallest constant valid for that `c`.
pub fn fit_condition_constants(samples: &[(f64, f64, f64)]) -> (f64, f64) {
    let mut best = (f64::INFINITY, 0.0, f64::INFINITY);
    for step in 0..=12 {
        let c = step as f64 * 0.25;
        let k = samples
            .iter()
            .map(|&(theta, h, e)| e / (theta * (h.powf(c) + 1.0)))
            .fold(0.0, f64::max);
        let total: f64 = samples
            .iter()
            .map(|&(theta, h, _)| theta * k * (h.powf(c) + 1.0))
            .sum();
        if total < best.2 {
            best = (k, c, total);
        }
    }
    (best.0, best.1)
}

/// Outcome of [`drift_check`]. All expectations are kept in log space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub radii: Vec<f64>,
    /// `log` of the empirical mean of `e^{‖X_1‖}` at each radius.
    pub log_means: Vec<f64>,
    /// Delta-method standard errors of `log_means`.
    pub log_std_errors: Vec<f64>,
    /// `log Â` for the smallest `Â ≥ 0` with every point under
    /// `e^{−1} e^r + Â`; `−∞` when `Â = 0`.
    pub log_intercept: f64,
    /// `E[e^{‖X_1‖}] / e^r` at the largest radius.
    pub slope: f64,
    /// Standard error of `slope`.
    pub slope_std_error: f64,
    /// Every point satisfies the affine bound with the fitted intercept.
    pub feasible: bool,
    /// `slope ≤ e^{−1} + 3 · slope_std_error`.
    pub slope_ok: bool,
}

impl DriftReport {
    pub fn pass(&self) -> bool {
        self.feasible && self.slope_ok
    }
}

/// `log(mean(e^{v_i}))` and the delta-method standard error of that log.
pub fn log_mean_exp(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = values.iter().map(|v| (v - m).exp()).collect();
    let mean = w.iter().sum::<f64>() / n;
    let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m + mean.ln(), (var / n).sqrt() / mean)
}

/// Estimates `E[e^{‖X_1‖} | ‖X_0‖ = r]` for each radius from `replicas`
/// one-step transitions started at uniformly random points of norm `r`.
pub fn drift_check(
    pot: &dyn Potential,
    spec: &KernelSpec,
    radii: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<DriftReport> {
    if replicas < 100 {
        return Err(Error::invalid(format!(
            "drift check needs >= 100 replicas, got {replicas}"
        )));
    }
    if radii.is_empty() || radii.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
        return Err(Error::invalid("drift radii must be finite and nonnegative"));
    }
    let d = pot.dim();
    let mut log_means = Vec::with_capacity(radii.len());
    let mut log_std_errors = Vec::with_capacity(radii.len());
    for (ri, &r) in radii.iter().enumerate() {
        let base = derive_seed(seed, ri as u64);
        let norms = map_replicas(replicas, |i| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(base, i as u64));
            let x0 = uniform_on_sphere(&mut rng, d, r);
            let mut source = MomentumSource::new(derive_seed(base ^ 0xA5A5, i as u64), d);
            let p = source.next_momentum();
            let u = source.next_uniform();
            let mut ledger = CostLedger::default();
            Ok(norm(&transition(pot, spec, &x0, &p, u, &mut ledger)?.next))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let (lm, se) = log_mean_exp(&norms);
        log_means.push(lm);
        log_std_errors.push(se);
    }
    let mut log_a = f64::NEG_INFINITY;
    for (&r, &lm) in radii.iter().zip(&log_means) {
        if lm > r - 1.0 {
            log_a = log_a.max(log_sub_exp(lm, r - 1.0));
        }
    }
    let feasible = radii
        .iter()
        .zip(&log_means)
        .all(|(&r, &lm)| lm <= log_drift_rhs(r, log_a) + 1e-12);
    let last = radii
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("radii is non-empty");
    let slope = (log_means[last] - radii[last]).exp();
    let slope_std_error = slope * log_std_errors[last];
    let slope_ok = slope <= (-1.0f64).exp() + 3.0 * slope_std_error;
    Ok(DriftReport {
        radii: radii.to_vec(),
        log_means,
        log_std_errors,
        log_intercept: log_a,
        slope,
        slope_std_error,
        feasible,
        slope_ok,
    })
}

/// `log E[e^{‖p‖/√(2 m2)}]` for `p ~ N(0, I_d)`, estimated from `samples`
/// draws. Bounds the drift expectation at `r = 0`.
pub fn momentum_energy_bound(dim: usize, m2: f64, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (2.0 * m2).sqrt();
    let v: Vec<f64> = (0..samples)
        .map(|_| norm(&gaussian_vec(&mut rng, dim)) * scale)
        .collect();
    log_mean_exp(&v)
}

/// Outcome of [`good_set_statistics`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodSetReport {
    pub replicas: usize,
    pub steps: usize,
    pub exits: usize,
    pub exit_frequency: f64,
    /// Mean exit step over replicas that exited.
    pub mean_exit_step: Option<f64>,
}

/// Fraction of replicas whose phase points `(X_h, p_h)` leave the good set
/// within `steps` transitions. Chains start at the minimizer.
pub fn good_set_statistics(
    pot: &SeparablePotential,
    spec: &KernelSpec,
    good: &GoodSetSpec,
    steps: usize,
    replicas: usize,
    seed: u64,
) -> Result<GoodSetReport> {
    let d = pot.dim();
    good.validate(d)?;
    if replicas == 0 {
        return Err(Error::invalid(
            "good-set statistics need at least one replica",
        ));
    }
    let exits = map_replicas(replicas, |i| -> Result<Option<usize>> {
        let mut source = MomentumSource::new(derive_seed(seed, i as u64), d);
        let mut ledger = CostLedger::default();
        let mut x = pot.minimizer();
        for h in 0..steps {
            let p = source.next_momentum();
            let u = source.next_uniform();
            if !good.contains(&x, &p) {
                return Ok(Some(h));
            }
            x = transition(pot, spec, &x, &p, u, &mut ledger)?.next;
        }
        Ok(None)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let exited: Vec<usize> = exits.into_iter().flatten().collect();
    Ok(GoodSetReport {
        replicas,
        steps,
        exits: exited.len(),
        exit_frequency: exited.len() as f64 / replicas as f64,
        mean_exit_step: (!exited.is_empty())
            .then(|| exited.iter().sum::<usize>() as f64 / exited.len() as f64),
    })
}

/// Distance trace of two chains driven by one momentum source, one running
/// `a` and the other `b`. Used to compare an unadjusted chain with the ideal
/// chain step by step.
pub fn couple_kernels(
    pot: &dyn Potential,
    a: &KernelSpec,
    b: &KernelSpec,
    x0: &[f64],
    y0: &[f64],
    steps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_start(pot, x0)?;
    check_start(pot, y0)?;
    let mut source = MomentumSource::new(seed, pot.dim());
    let mut ledger = CostLedger::default();
    let (mut x, mut y) = (x0.to_vec(), y0.to_vec());
    let mut out = vec![dist(&x, &y)];
    for _ in 0..steps {
        let p = source.next_momentum();
        let u = source.next_uniform();
        x = transition(pot, a, &x, &p, u, &mut ledger)?.next;
        y = transition(pot, b, &y, &p, u, &mut ledger)?.next;
        out.push(dist(&x, &y));
    }
    Ok(out)
}

/// `log(e^a − e^b)` for `a ≥ b`.
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    a + (-(b - a).exp()).ln_1p()
}
