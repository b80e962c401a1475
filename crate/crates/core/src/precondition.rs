//! Rounding transforms built from a single Hessian evaluation.
//!
//! With `A = √H_x`, the rounded potential `Ũ(z) = U(A⁻¹ z)` has Hessian
//! `A⁻¹ H_y A⁻¹`, whose eigenvalues lie in `[m2/M2, M2/m2]` at every `y`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::linalg::{all_finite, norm};
use crate::potentials::{ConvexityBounds, Potential};
use crate::{Error, Result};

/// Eigenvalues at or below this make a Hessian unusable for rounding.
pub const PD_FLOOR: f64 = 1e-12;
/// Relative tolerance of [`verify_rounding`].
pub const ROUNDING_TOL: f64 = 1e-6;

/// Central-difference step `ε^{1/3} (1 + ‖x‖)`.
pub fn default_fd_step(x: &[f64]) -> f64 {
    f64::EPSILON.cbrt() * (1.0 + norm(x))
}

/// Hessian of `U` at `x` from central differences of the gradient with
/// step `h`, symmetrized as `(M + Mᵀ)/2`.
pub fn hessian_at(pot: &dyn Potential, x: &[f64], h: f64) -> Result<DMatrix<f64>> {
    let d = pot.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: x.len(),
        });
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid(format!(
            "finite-difference step must be > 0, got {h}"
        )));
    }
    let mut m = DMatrix::zeros(d, d);
    let mut probe = x.to_vec();
    let mut gp = vec![0.0; d];
    let mut gm = vec![0.0; d];
    for j in 0..d {
        probe[j] = x[j] + h;
        pot.gradient_into(&probe, &mut gp);
        probe[j] = x[j] - h;
        pot.gradient_into(&probe, &mut gm);
        probe[j] = x[j];
        let step = (x[j] + h) - (x[j] - h);
        for i in 0..d {
            m[(i, j)] = (gp[i] - gm[i]) / step;
        }
    }
    let sym = (&m + m.transpose()) * 0.5;
    if !all_finite(sym.as_slice()) {
        return Err(Error::NonFinite("finite-difference Hessian".into()));
    }
    Ok(sym)
}

/// The analytic Hessian when the potential provides one, else central
/// differences with [`default_fd_step`].
pub fn hessian_or_fd(pot: &dyn Potential, x: &[f64]) -> Result<DMatrix<f64>> {
    match pot.hessian(x) {
        Some(h) => Ok(h),
        None => hessian_at(pot, x, default_fd_step(x)),
    }
}

/// Invertible linear map `A` with cached `A⁻¹` and the anchor it was built at.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundingTransform {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    anchor: Vec<f64>,
}

impl RoundingTransform {
    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
            inverse: DMatrix::identity(dim, dim),
            anchor: vec![0.0; dim],
        }
    }

    /// Principal square root of a symmetric positive definite matrix.
    pub fn sqrt_of(h: &DMatrix<f64>, anchor: Vec<f64>) -> Result<Self> {
        if !h.is_square() || h.nrows() != anchor.len() {
            return Err(Error::DimensionMismatch {
                expected: anchor.len(),
                actual: h.nrows(),
            });
        }
        let sym = (h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let smallest = eig
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if !(smallest > PD_FLOOR) {
            return Err(Error::NotPositiveDefinite(smallest));
        }
        let v = &eig.eigenvectors;
        let root = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
        let inv_root = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
        let symmetrize = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
        Ok(Self {
            matrix: symmetrize(v * root * v.transpose()),
            inverse: symmetrize(v * inv_root * v.transpose()),
            anchor,
        })
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    /// `z = A x`.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(x))
            .as_slice()
            .to_vec()
    }

    /// `x = A⁻¹ z`.
    pub fn backward(&self, z: &[f64]) -> Vec<f64> {
        (&self.inverse * DVector::from_column_slice(z))
            .as_slice()
            .to_vec()
    }
}

/// `A = √H_x`, with the analytic Hessian when available.
pub fn build_rounding(pot: &dyn Potential, x: &[f64]) -> Result<RoundingTransform> {
    let h = hessian_or_fd(pot, x)?;
    RoundingTransform::sqrt_of(&h, x.to_vec())
}

/// `Ũ(z) = U(A⁻¹ z)`.
#[derive(Debug, Clone)]
pub struct RoundedPotential {
    inner: Arc<dyn Potential>,
    transform: RoundingTransform,
}

impl RoundedPotential {
    pub fn transform(&self) -> &RoundingTransform {
        &self.transform
    }

    pub fn inner(&self) -> &Arc<dyn Potential> {
        &self.inner
    }
}

/// Wraps `pot` in the change of variables `z = A x`. The reported bounds
/// are the guaranteed `[m2/M2, M2/m2]`.
pub fn transform_potential(
    pot: Arc<dyn Potential>,
    t: RoundingTransform,
) -> Result<RoundedPotential> {
    if t.dim() != pot.dim() {
        return Err(Error::DimensionMismatch {
            expected: pot.dim(),
            actual: t.dim(),
        });
    }
    Ok(RoundedPotential {
        inner: pot,
        transform: t,
    })
}

impl Potential for RoundedPotential {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, z: &[f64]) -> f64 {
        self.inner.value(&self.transform.backward(z))
    }

    fn gradient_into(&self, z: &[f64], out: &mut [f64]) {
        let g = self.inner.gradient(&self.transform.backward(z));
        let pulled = self.transform.inverse.transpose() * DVector::from_vec(g);
        out.copy_from_slice(pulled.as_slice());
    }

    fn bounds(&self) -> ConvexityBounds {
        let b = self.inner.bounds();
        ConvexityBounds {
            m2: b.m2 / b.big_m2,
            big_m2: b.big_m2 / b.m2,
            big_m3: None,
        }
    }

    fn hessian(&self, z: &[f64]) -> Option<DMatrix<f64>> {
        let h = self.inner.hessian(&self.transform.backward(z))?;
        let inv = &self.transform.inverse;
        Some(inv.transpose() * h * inv)
    }

    fn minimizer(&self) -> Vec<f64> {
        self.transform.forward(&self.inner.minimizer())
    }
}

/// Outcome of [`verify_rounding`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundingReport {
    pub points: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// `m2/M2` of the original potential.
    pub lower: f64,
    /// `M2/m2` of the original potential.
    pub upper: f64,
    /// Points with an eigenvalue outside the widened interval.
    pub violations: usize,
    pub pass: bool,
}

impl RoundingReport {
    /// `max_eigenvalue / min_eigenvalue` over all points.
    pub fn spread(&self) -> f64 {
        self.max_eigenvalue / self.min_eigenvalue
    }
}

/// Eigenvalues of `A⁻ᵀ H_y A⁻¹` at `y`, the Hessian of the rounded potential
/// at `z = A y`.
pub fn rounded_hessian_eigenvalues(
    pot: &dyn Potential,
    t: &RoundingTransform,
    y: &[f64],
) -> Result<Vec<f64>> {
    let h = hessian_or_fd(pot, y)?;
    let inv = t.inverse();
    let m = inv.transpose() * h * inv;
    let m = (&m + m.transpose()) * 0.5;
    Ok(SymmetricEigen::new(m).eigenvalues.as_slice().to_vec())
}

/// Checks that the rounded Hessian at every bulk point `y` (in original
/// coordinates) has eigenvalues in `[m2/M2, M2/m2]` up to a relative
/// tolerance of [`ROUNDING_TOL`].
pub fn verify_rounding(
    pot: &dyn Potential,
    t: &RoundingTransform,
    bulk_points: &[Vec<f64>],
) -> Result<RoundingReport> {
    if bulk_points.is_empty() {
        return Err(Error::invalid(
            "rounding check needs at least one bulk point",
        ));
    }
    let b = pot.bounds();
    let lower = b.m2 / b.big_m2;
    let upper = b.big_m2 / b.m2;
    let lo = lower * (1.0 - ROUNDING_TOL);
    let hi = upper * (1.0 + ROUNDING_TOL);
    let mut min_eig = f64::INFINITY;
    let mut max_eig = f64::NEG_INFINITY;
    let mut violations = 0;
    for y in bulk_points {
        let eigs = rounded_hessian_eigenvalues(pot, t, y)?;
        let (mn, mx) = eigs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), &e| {
                (a.min(e), c.max(e))
            });
        min_eig = min_eig.min(mn);
        max_eig = max_eig.max(mx);
        if !(mn >= lo && mx <= hi) {
            violations += 1;
        }
    }
    Ok(RoundingReport {
        points: bulk_points.len(),
        min_eigenvalue: min_eig,
        max_eigenvalue: max_eig,
        lower,
        upper,
        violations,
        pass: violations == 0,
    })
}
