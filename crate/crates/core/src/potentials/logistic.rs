use nalgebra::{DMatrix, DVector};

use super::{ConvexityBounds, Potential};
use crate::{Error, Result};

const NEWTON_GRAD_TOL: f64 = 1e-11;
const NEWTON_MAX_ITERS: usize = 200;

/// Posterior of logistic regression under a Gaussian (ridge) prior:
/// `f(w) = Σ log(1 + exp(−y_i x_iᵀw)) + (ridge/2)‖w‖²`, translated so
/// `U(q) = f(q + w*) − f(w*)`.
///
/// Bounds are conservative: `m2 = ridge`, `M2 = ridge + ¼ σ_max(XᵀX)`.
#[derive(Debug, Clone)]
pub struct RidgeLogistic {
    dim: usize,
    /// Rows pre-multiplied by their labels, `y_i x_i`.
    signed_rows: Vec<Vec<f64>>,
    ridge: f64,
    mode: Vec<f64>,
    offset: f64,
    big_m2: f64,
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl RidgeLogistic {
    pub fn new(features: &[Vec<f64>], labels: &[f64], dim: usize, ridge: f64) -> Result<Self> {
        if !(ridge.is_finite() && ridge > 0.0) {
            return Err(Error::invalid(format!(
                "ridge must be positive, got {ridge}"
            )));
        }
        if dim == 0 {
            return Err(Error::invalid("logistic target needs dim >= 1"));
        }
        if features.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let mut signed_rows = Vec::with_capacity(features.len());
        for (i, (row, &y)) in features.iter().zip(labels).enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            if y != 1.0 && y != -1.0 {
                return Err(Error::invalid(format!("label {i} is {y}, expected ±1")));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("feature row {i}")));
            }
            signed_rows.push(row.iter().map(|v| y * v).collect::<Vec<_>>());
        }
        let gram = signed_rows
            .iter()
            .fold(DMatrix::<f64>::zeros(dim, dim), |acc, r| {
                let v = DVector::from_column_slice(r);
                acc + &v * v.transpose()
            });
        let sigma_max = gram
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(0.0, f64::max);
        let mut pot = Self {
            dim,
            signed_rows,
            ridge,
            mode: vec![0.0; dim],
            offset: 0.0,
            big_m2: ridge + 0.25 * sigma_max,
        };
        pot.mode = pot.newton()?;
        pot.offset = pot.raw_value(&pot.mode);
        Ok(pot)
    }

    pub fn mode(&self) -> &[f64] {
        &self.mode
    }

    fn raw_value(&self, w: &[f64]) -> f64 {
        let data: f64 = self
            .signed_rows
            .iter()
            .map(|r| softplus(-crate::linalg::dot(r, w)))
            .sum();
        data + 0.5 * self.ridge * crate::linalg::norm_sq(w)
    }

    fn raw_gradient(&self, w: &[f64], out: &mut [f64]) {
        for (o, wi) in out.iter_mut().zip(w) {
            *o = self.ridge * wi;
        }
        for r in &self.signed_rows {
            let s = sigmoid(-crate::linalg::dot(r, w));
            crate::linalg::axpy(-s, r, out);
        }
    }

    fn raw_hessian(&self, w: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::<f64>::identity(self.dim, self.dim) * self.ridge;
        for r in &self.signed_rows {
            let s = sigmoid(-crate::linalg::dot(r, w));
            let v = DVector::from_column_slice(r);
            h += (&v * v.transpose()) * (s * (1.0 - s));
        }
        h
    }

    fn newton(&self) -> Result<Vec<f64>> {
        let mut w = DVector::<f64>::zeros(self.dim);
        let mut g = vec![0.0; self.dim];
        for _ in 0..NEWTON_MAX_ITERS {
            self.raw_gradient(w.as_slice(), &mut g);
            let gn = crate::linalg::norm(&g);
            if gn <= NEWTON_GRAD_TOL {
                return Ok(w.as_slice().to_vec());
            }
            let h = self.raw_hessian(w.as_slice());
            let step = h
                .cholesky()
                .ok_or(Error::NotPositiveDefinite(self.ridge))?
                .solve(&DVector::from_column_slice(&g));
            // Backtracking keeps the iteration monotone far from the mode;
            // near it the value stalls at rounding level and the gradient
            // norm decides instead.
            let f0 = self.raw_value(w.as_slice());
            let mut t = 1.0;
            let mut gc = vec![0.0; self.dim];
            loop {
                let cand = &w - &step * t;
                self.raw_gradient(cand.as_slice(), &mut gc);
                if self.raw_value(cand.as_slice()) < f0
                    || crate::linalg::norm(&gc) < gn
                    || t < 1e-12
                {
                    w = cand;
                    break;
                }
                t *= 0.5;
            }
        }
        self.raw_gradient(w.as_slice(), &mut g);
        Err(Error::NotConverged {
            halvings: NEWTON_MAX_ITERS as u32,
            last_change: crate::linalg::norm(&g),
        })
    }

    fn shifted(&self, q: &[f64]) -> Vec<f64> {
        q.iter().zip(&self.mode).map(|(a, b)| a + b).collect()
    }
}

impl Potential for RidgeLogistic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, q: &[f64]) -> f64 {
        (self.raw_value(&self.shifted(q)) - self.offset).max(0.0)
    }

    fn gradient_into(&self, q: &[f64], out: &mut [f64]) {
        self.raw_gradient(&self.shifted(q), out);
    }

    fn bounds(&self) -> ConvexityBounds {
        ConvexityBounds {
            m2: self.ridge,
            big_m2: self.big_m2,
            big_m3: None,
        }
    }

    fn hessian(&self, q: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.raw_hessian(&self.shifted(q)))
    }
}
