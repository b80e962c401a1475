use std::sync::Arc;

use nalgebra::DMatrix;

use super::{ConvexityBounds, Potential};
use crate::{Error, Result};

/// `U(q) = Σ_i U_i(q^(i))` over consecutive blocks of size `block_dim`.
#[derive(Debug, Clone)]
pub struct SeparablePotential {
    block_dim: usize,
    blocks: Vec<Arc<dyn Potential>>,
    eigenvalues: Option<Vec<f64>>,
}

impl SeparablePotential {
    pub fn new(block_dim: usize, blocks: Vec<Arc<dyn Potential>>) -> Result<Self> {
        if block_dim == 0 || blocks.is_empty() {
            return Err(Error::invalid(
                "separable target needs block_dim >= 1 and at least one block",
            ));
        }
        if let Some(b) = blocks.iter().find(|b| b.dim() != block_dim) {
            return Err(Error::DimensionMismatch {
                expected: block_dim,
                actual: b.dim(),
            });
        }
        let eigenvalues = blocks
            .iter()
            .map(|b| b.gaussian_eigenvalues().map(<[f64]>::to_vec))
            .collect::<Option<Vec<_>>>()
            .map(|v| v.concat());
        Ok(Self {
            block_dim,
            blocks,
            eigenvalues,
        })
    }

    /// `count` copies of the same block.
    pub fn replicate(block: Arc<dyn Potential>, count: usize) -> Result<Self> {
        let block_dim = block.dim();
        Self::new(block_dim, vec![block; count])
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn blocks(&self) -> &[Arc<dyn Potential>] {
        &self.blocks
    }
}

impl Potential for SeparablePotential {
    fn dim(&self) -> usize {
        self.block_dim * self.blocks.len()
    }

    fn value(&self, q: &[f64]) -> f64 {
        self.blocks
            .iter()
            .zip(q.chunks_exact(self.block_dim))
            .map(|(b, qi)| b.value(qi))
            .sum()
    }

    fn gradient_into(&self, q: &[f64], out: &mut [f64]) {
        for ((b, qi), oi) in self
            .blocks
            .iter()
            .zip(q.chunks_exact(self.block_dim))
            .zip(out.chunks_exact_mut(self.block_dim))
        {
            b.gradient_into(qi, oi);
        }
    }

    fn bounds(&self) -> ConvexityBounds {
        let bs: Vec<_> = self.blocks.iter().map(|b| b.bounds()).collect();
        ConvexityBounds {
            m2: bs.iter().map(|b| b.m2).fold(f64::INFINITY, f64::min),
            big_m2: bs.iter().map(|b| b.big_m2).fold(0.0, f64::max),
            big_m3: bs
                .iter()
                .map(|b| b.big_m3)
                .collect::<Option<Vec<_>>>()
                .map(|v| v.into_iter().fold(0.0, f64::max)),
        }
    }

    fn gaussian_eigenvalues(&self) -> Option<&[f64]> {
        self.eigenvalues.as_deref()
    }

    fn hessian(&self, q: &[f64]) -> Option<DMatrix<f64>> {
        let d = self.dim();
        let m = self.block_dim;
        let mut h = DMatrix::zeros(d, d);
        for (i, (b, qi)) in self.blocks.iter().zip(q.chunks_exact(m)).enumerate() {
            let hb = b.hessian(qi)?;
            h.view_mut((i * m, i * m), (m, m)).copy_from(&hb);
        }
        Some(h)
    }
}
