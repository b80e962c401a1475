#![allow(dead_code)]

use std::sync::Arc;

use hmc_lab::potentials::{
    Gaussian, PerturbedQuadratic, Potential, RidgeLogistic, SeparablePotential,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small synthetic logistic-regression data set with ±1 labels.
pub fn logistic() -> RidgeLogistic {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let dim = 3;
    let features: Vec<Vec<f64>> = (0..40)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect())
        .collect();
    let labels: Vec<f64> = features
        .iter()
        .map(|x| {
            if x[0] - 0.5 * x[1] + rng.random_range(-0.5..0.5) > 0.0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    RidgeLogistic::new(&features, &labels, dim, 0.5).unwrap()
}

pub fn separable() -> SeparablePotential {
    SeparablePotential::new(
        2,
        vec![
            Arc::new(Gaussian::new(vec![1.0, 3.0]).unwrap()),
            Arc::new(PerturbedQuadratic::new(2, 0.2, 5).unwrap()),
            Arc::new(Gaussian::new(vec![2.0, 2.0]).unwrap()),
        ],
    )
    .unwrap()
}

/// Every shipped target family, with a label.
pub fn shipped_targets() -> Vec<(&'static str, Arc<dyn Potential>)> {
    vec![
        (
            "gaussian",
            Arc::new(Gaussian::new(vec![1.0, 4.0, 9.0]).unwrap()),
        ),
        (
            "perturbed",
            Arc::new(PerturbedQuadratic::new(6, 0.1, 3).unwrap()),
        ),
        ("logistic", Arc::new(logistic())),
        ("separable", Arc::new(separable())),
    ]
}
