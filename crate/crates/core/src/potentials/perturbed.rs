use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ConvexityBounds, Potential};
use crate::linalg::norm;
use crate::{Error, Result};

const MINIMIZER_GRAD_TOL: f64 = 1e-10;
const MAX_DESCENT_ITERS: usize = 10_000;

/// `U(q) = ½‖q + c‖² + a Σ cos(q_i + c_i + φ_i) − U_min`.
///
/// The phases `φ_i` are drawn from the seed; `c` is the raw minimizer,
/// located by gradient descent so that the minimum sits at the origin.
/// Hessian eigenvalues are `1 − a cos(·)`, i.e. inside `[1 − a, 1 + a]`.
#[derive(Debug, Clone)]
pub struct PerturbedQuadratic {
    amplitude: f64,
    phases: Vec<f64>,
    shift: Vec<f64>,
    eigenvalues: Option<Vec<f64>>,
}

impl PerturbedQuadratic {
    pub fn new(dim: usize, amplitude: f64, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("perturbed quadratic needs dim >= 1"));
        }
        if !(0.0..0.25).contains(&amplitude) {
            return Err(Error::invalid(format!(
                "perturbation amplitude must lie in [0, 1/4), got {amplitude}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phases: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * TAU).collect();
        let mut pot = Self {
            amplitude,
            phases,
            shift: vec![0.0; dim],
            eigenvalues: (amplitude == 0.0).then(|| vec![1.0; dim]),
        };
        pot.shift = pot.locate_minimizer()?;
        Ok(pot)
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Raw minimizer `c`, in the untranslated coordinates.
    pub fn raw_minimizer(&self) -> &[f64] {
        &self.shift
    }

    fn raw_gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.phases)
            .map(|(xi, ph)| xi - self.amplitude * (xi + ph).sin())
            .collect()
    }

    // Gradient descent with unit step: the Hessian lies in [1 - a, 1 + a],
    // so each iteration contracts the gradient by at least a factor a.
    fn locate_minimizer(&self) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.phases.len()];
        for _ in 0..MAX_DESCENT_ITERS {
            let g = self.raw_gradient(&x);
            if norm(&g) <= MINIMIZER_GRAD_TOL {
                return Ok(x);
            }
            for (xi, gi) in x.iter_mut().zip(&g) {
                *xi -= gi;
            }
        }
        Err(Error::NonFinite(
            "perturbed-quadratic minimizer search did not converge".into(),
        ))
    }
}

impl Potential for PerturbedQuadratic {
    fn dim(&self) -> usize {
        self.phases.len()
    }

    fn value(&self, q: &[f64]) -> f64 {
        // Difference form avoids cancellation against U_min:
        // ½((q+c)² − c²) = ½q(q + 2c),
        // cos(q+c+φ) − cos(c+φ) = −2 sin(q/2) sin(q/2 + c + φ).
        let a = self.amplitude;
        let v: f64 = q
            .iter()
            .zip(&self.shift)
            .zip(&self.phases)
            .map(|((qi, ci), ph)| {
                0.5 * qi * (qi + 2.0 * ci) - 2.0 * a * (0.5 * qi).sin() * (0.5 * qi + ci + ph).sin()
            })
            .sum();
        v.max(0.0)
    }

    fn gradient_into(&self, q: &[f64], out: &mut [f64]) {
        let a = self.amplitude;
        for (((o, qi), ci), ph) in out.iter_mut().zip(q).zip(&self.shift).zip(&self.phases) {
            let x = qi + ci;
            *o = x - a * (x + ph).sin();
        }
    }

    fn bounds(&self) -> ConvexityBounds {
        ConvexityBounds {
            m2: 1.0 - self.amplitude,
            big_m2: 1.0 + self.amplitude,
            big_m3: Some(self.amplitude),
        }
    }

    fn gaussian_eigenvalues(&self) -> Option<&[f64]> {
        self.eigenvalues.as_deref()
    }

    fn hessian(&self, q: &[f64]) -> Option<DMatrix<f64>> {
        let diag: Vec<f64> = q
            .iter()
            .zip(&self.shift)
            .zip(&self.phases)
            .map(|((qi, ci), ph)| 1.0 - self.amplitude * (qi + ci + ph).cos())
            .collect();
        Some(DMatrix::from_diagonal(&DVector::from_vec(diag)))
    }
}
