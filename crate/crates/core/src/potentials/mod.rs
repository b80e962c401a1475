//! Target distributions π ∝ exp(−U) and their convexity metadata.
//!
//! Every constructor translates coordinates so that the minimizer of `U` is
//! the origin and `U(0) = 0`.

mod config;
mod gaussian;
mod logistic;
mod perturbed;
mod separable;

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::linalg::{dist, dot, norm_sq, sub};

pub use config::{load_logistic_csv, TargetSpec};
pub use gaussian::Gaussian;
pub use logistic::RidgeLogistic;
pub use perturbed::PerturbedQuadratic;
pub use separable::SeparablePotential;

/// Curvature bounds of a strongly convex potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvexityBounds {
    /// Lower bound `m2` on the Hessian eigenvalues.
    pub m2: f64,
    /// Upper bound `M2` on the Hessian eigenvalues (gradient Lipschitz constant).
    pub big_m2: f64,
    /// Optional bound `M3` on the third derivative.
    pub big_m3: Option<f64>,
}

impl ConvexityBounds {
    pub fn condition_number(&self) -> f64 {
        self.big_m2 / self.m2
    }

    /// The largest integration time the contraction argument allows,
    /// `T = √m2 / (2√2 M2)`.
    pub fn default_time(&self) -> f64 {
        self.m2.sqrt() / (2.0 * std::f64::consts::SQRT_2 * self.big_m2)
    }
}

/// A potential `U: R^d → [0, ∞)` with gradient.
///
/// Implementations must be pure: evaluation never mutates shared state, so a
/// potential can be shared between chains running on different threads.
pub trait Potential: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn value(&self, q: &[f64]) -> f64;

    /// Writes `U'(q)` into `out`.
    fn gradient_into(&self, q: &[f64], out: &mut [f64]);

    fn bounds(&self) -> ConvexityBounds;

    /// Precision eigenvalues when the potential is the diagonal quadratic
    /// `½ Σ λ_i q_i²`; enables the closed-form flow.
    fn gaussian_eigenvalues(&self) -> Option<&[f64]> {
        None
    }

    /// Analytic Hessian, when the implementation knows it.
    fn hessian(&self, _q: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    fn gradient(&self, q: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(q, &mut g);
        g
    }

    fn minimizer(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }
}

pub type SharedPotential = Arc<dyn Potential>;

/// Builds `½ Σ λ_i q_i²`.
pub fn make_gaussian(precision_eigenvalues: &[f64]) -> crate::Result<Gaussian> {
    Gaussian::new(precision_eigenvalues.to_vec())
}

pub fn make_perturbed_quadratic(
    dim: usize,
    amplitude: f64,
    seed: u64,
) -> crate::Result<PerturbedQuadratic> {
    PerturbedQuadratic::new(dim, amplitude, seed)
}

pub fn make_ridge_logistic(
    features: &[Vec<f64>],
    labels: &[f64],
    dim: usize,
    ridge: f64,
) -> crate::Result<RidgeLogistic> {
    RidgeLogistic::new(features, labels, dim, ridge)
}

/// Worst observed ratios from [`validate_convexity`].
#[derive(Debug, Clone, Serialize)]
pub struct ConvexityReport {
    pub pairs: usize,
    /// `min ⟨U'(x) − U'(y), x − y⟩ / ‖x − y‖²`; should be ≥ m2.
    pub worst_lower_ratio: f64,
    /// `max ‖U'(x) − U'(y)‖ / ‖x − y‖`; should be ≤ M2.
    pub worst_upper_ratio: f64,
    /// `min 2U(q)/‖q‖²` over the sampled points; should be ≥ m2.
    pub worst_growth_lower: f64,
    /// `max 2U(q)/‖q‖²`; should be ≤ M2.
    pub worst_growth_upper: f64,
    pub violation: bool,
}

const CONVEXITY_REL_TOL: f64 = 1e-7;

/// Samples `samples` pairs uniformly in the ball of the given radius and
/// checks strong convexity and gradient Lipschitz continuity against the
/// declared bounds.
pub fn validate_convexity(
    pot: &dyn Potential,
    samples: usize,
    radius: f64,
    seed: u64,
) -> ConvexityReport {
    let d = pot.dim();
    let b = pot.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lower = f64::INFINITY;
    let mut upper: f64 = 0.0;
    let mut growth_lower = f64::INFINITY;
    let mut growth_upper: f64 = 0.0;
    let mut pairs = 0;
    while pairs < samples.max(1) {
        let x = uniform_in_ball(&mut rng, d, radius);
        let y = uniform_in_ball(&mut rng, d, radius);
        let dxy = sub(&x, &y);
        let r2 = norm_sq(&dxy);
        if r2 == 0.0 {
            continue;
        }
        let gx = pot.gradient(&x);
        let gy = pot.gradient(&y);
        let dg = sub(&gx, &gy);
        lower = lower.min(dot(&dg, &dxy) / r2);
        upper = upper.max(dist(&gx, &gy) / r2.sqrt());
        for p in [&x, &y] {
            let n2 = norm_sq(p);
            if n2 > 0.0 {
                let g = 2.0 * pot.value(p) / n2;
                growth_lower = growth_lower.min(g);
                growth_upper = growth_upper.max(g);
            }
        }
        pairs += 1;
    }
    let below = |v: f64| v < b.m2 * (1.0 - CONVEXITY_REL_TOL);
    let above = |v: f64| v > b.big_m2 * (1.0 + CONVEXITY_REL_TOL);
    let violation = below(lower) || above(upper) || below(growth_lower) || above(growth_upper);
    ConvexityReport {
        pairs,
        worst_lower_ratio: lower,
        worst_upper_ratio: upper,
        worst_growth_lower: growth_lower,
        worst_growth_upper: growth_upper,
        violation,
    }
}

/// Uniform point in the `d`-ball of radius `radius`.
pub fn uniform_in_ball<R: Rng + ?Sized>(rng: &mut R, d: usize, radius: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let n = norm_sq(&v).sqrt();
    let u: f64 = rng.random();
    let scale = radius * u.powf(1.0 / d as f64) / n;
    v.iter_mut().for_each(|x| *x *= scale);
    v
}

/// Uniform point on the sphere of radius `radius`.
pub fn uniform_on_sphere<R: Rng + ?Sized>(rng: &mut R, d: usize, radius: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let n = norm_sq(&v).sqrt();
    v.iter_mut().for_each(|x| *x *= radius / n);
    v
}
