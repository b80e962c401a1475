//! Distance and convergence diagnostics between sample batches.

mod assignment;
mod stationarity;

pub use assignment::{min_cost_assignment, ASSIGNMENT_MAX_POINTS};
pub use stationarity::{
    effective_sample_size, gaussian_moment_test, moment_z_scores, MomentTestReport,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::linalg::{dist, dot};
use crate::potentials::uniform_on_sphere;
use crate::{Error, Result};

/// Equal-weight empirical measure: `n ≥ 1` finite points in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    points: Vec<Vec<f64>>,
    dim: usize,
}

impl SampleBatch {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::invalid("sample batch needs at least one point"))?;
        if dim == 0 {
            return Err(Error::invalid("sample points need dimension >= 1"));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("sample batch entry".into()));
            }
        }
        Ok(Self { points, dim })
    }

    /// Batch of one-dimensional points.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| vec![v]).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn project(&self, direction: &[f64]) -> Vec<f64> {
        self.points.iter().map(|p| dot(p, direction)).collect()
    }
}

fn check_pair(a: &SampleBatch, b: &SampleBatch) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "batches must have equal sizes, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(())
}

/// Exact `W1` between two equal-size empirical measures on `R`:
/// `(1/n) Σ |a_(i) − b_(i)|` over the sorted samples.
pub fn w1_exact_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "samples must have equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::invalid("samples must be non-empty"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

/// Lexicographic order on batches, used to make `w1_assignment` exactly
/// symmetric when several matchings are optimal.
fn batch_order(a: &SampleBatch, b: &SampleBatch) -> std::cmp::Ordering {
    a.points()
        .iter()
        .flatten()
        .zip(b.points().iter().flatten())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Exact `W1` via a minimum-cost perfect matching on the Euclidean cost
/// matrix. Limited to [`ASSIGNMENT_MAX_POINTS`] points per batch.
pub fn w1_assignment(a: &SampleBatch, b: &SampleBatch) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.len();
    if n > ASSIGNMENT_MAX_POINTS {
        return Err(Error::invalid(format!(
            "assignment solver is limited to {ASSIGNMENT_MAX_POINTS} points, got {n}"
        )));
    }
    let (a, b) = if batch_order(a, b).is_le() {
        (a, b)
    } else {
        (b, a)
    };
    let cost: Vec<f64> = a
        .points()
        .iter()
        .flat_map(|x| b.points().iter().map(move |y| dist(x, y)))
        .collect();
    let matching = min_cost_assignment(&cost, n);
    let total: f64 = matching
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .sum();
    Ok(total / n as f64)
}

/// Max over `directions` random unit vectors of the exact 1-d `W1` between
/// the projected batches. A lower bound on `w1_assignment`.
pub fn w1_sliced(a: &SampleBatch, b: &SampleBatch, directions: usize, seed: u64) -> Result<f64> {
    check_pair(a, b)?;
    if directions == 0 {
        return Err(Error::invalid("sliced W1 needs at least one direction"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..directions {
        let u = uniform_on_sphere(&mut rng, a.dim(), 1.0);
        best = best.max(w1_exact_1d(&a.project(&u), &b.project(&u))?);
    }
    Ok(best)
}

/// `√W1`, an upper bound on the Prokhorov distance.
pub fn prokhorov_upper(a: &SampleBatch, b: &SampleBatch) -> Result<f64> {
    w1_assignment(a, b).map(f64::sqrt)
}

/// Which estimator produced a [`DistanceReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMethod {
    Exact1d,
    Assignment,
    Sliced,
}

/// `W1` estimate plus the derived Prokhorov bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceReport {
    pub w1: f64,
    pub prokhorov_upper: f64,
    pub method: DistanceMethod,
}

/// Picks the exact 1-d formula, the assignment solver, or (above the
/// assignment size limit) the sliced lower bound.
pub fn distance(
    a: &SampleBatch,
    b: &SampleBatch,
    directions: usize,
    seed: u64,
) -> Result<DistanceReport> {
    check_pair(a, b)?;
    let (w1, method) = if a.dim() == 1 {
        (
            w1_exact_1d(&a.project(&[1.0]), &b.project(&[1.0]))?,
            DistanceMethod::Exact1d,
        )
    } else if a.len() <= ASSIGNMENT_MAX_POINTS {
        (w1_assignment(a, b)?, DistanceMethod::Assignment)
    } else {
        (w1_sliced(a, b, directions, seed)?, DistanceMethod::Sliced)
    };
    Ok(DistanceReport {
        w1,
        prokhorov_upper: w1.sqrt(),
        method,
    })
}
