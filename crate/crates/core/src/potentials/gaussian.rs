use nalgebra::DMatrix;

use super::{ConvexityBounds, Potential};
use crate::{Error, Result};

/// Diagonal quadratic potential `U(q) = ½ Σ λ_i q_i²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    eigenvalues: Vec<f64>,
}

impl Gaussian {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::invalid(
                "gaussian target needs at least one eigenvalue",
            ));
        }
        if let Some(bad) = eigenvalues.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::invalid(format!(
                "precision eigenvalues must be positive and finite, got {bad}"
            )));
        }
        Ok(Self { eigenvalues })
    }

    /// `N(0, I_d)`.
    pub fn standard(dim: usize) -> Result<Self> {
        Self::new(vec![1.0; dim])
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

impl Potential for Gaussian {
    fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn value(&self, q: &[f64]) -> f64 {
        0.5 * self
            .eigenvalues
            .iter()
            .zip(q)
            .map(|(l, x)| l * x * x)
            .sum::<f64>()
    }

    fn gradient_into(&self, q: &[f64], out: &mut [f64]) {
        for ((o, l), x) in out.iter_mut().zip(&self.eigenvalues).zip(q) {
            *o = l * x;
        }
    }

    fn bounds(&self) -> ConvexityBounds {
        let m2 = self
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let big_m2 = self.eigenvalues.iter().copied().fold(0.0, f64::max);
        ConvexityBounds {
            m2,
            big_m2,
            big_m3: Some(0.0),
        }
    }

    fn gaussian_eigenvalues(&self) -> Option<&[f64]> {
        Some(&self.eigenvalues)
    }

    fn hessian(&self, _q: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(
            self.eigenvalues.clone(),
        )))
    }
}
