use serde::Serialize;

use crate::kernels::ChainTrace;
use crate::{Error, Result};

/// Threshold on every `|z|` in [`gaussian_moment_test`].
pub const MOMENT_Z_LIMIT: f64 = 5.0;

/// Effective sample size from Geyer's initial positive sequence estimator
/// on the empirical autocorrelations. Returns `None` for a constant series.
pub fn effective_sample_size(x: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let gamma0 = c.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if !(gamma0 > 0.0) {
        return None;
    }
    let acf = |lag: usize| -> f64 {
        c[..n - lag]
            .iter()
            .zip(&c[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
            / gamma0
    };
    // Sum consecutive autocorrelation pairs while they stay positive,
    // enforcing monotone decrease of the pair sums.
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = acf(lag) + acf(lag + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        lag += 2;
    }
    let tau = tau.max(1.0 / n as f64);
    Some((n as f64 / tau).min(n as f64 * (n as f64).log10()))
}

fn mean_z(values: &[f64], target: f64) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let ess = effective_sample_size(values).unwrap_or(1.0);
    let z = (mean - target) / (var / ess).sqrt();
    (if z.is_nan() { f64::INFINITY } else { z }, ess)
}

/// `z`-scores of the raw moments `E[x^k]`, `k = 1..=max_order`, against a
/// centred Gaussian with precision `lambda`, each with its own ESS.
pub fn moment_z_scores(samples: &[f64], lambda: f64, max_order: u32) -> Vec<f64> {
    (1..=max_order)
        .map(|k| {
            let powered: Vec<f64> = samples.iter().map(|x| x.powi(k as i32)).collect();
            mean_z(&powered, gaussian_raw_moment(k, lambda)).0
        })
        .collect()
}

/// `E[x^k]` for `x ~ N(0, 1/λ)`.
fn gaussian_raw_moment(k: u32, lambda: f64) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let double_factorial: f64 = (1..k).step_by(2).map(f64::from).product();
    double_factorial * lambda.powi(-(k as i32) / 2)
}

/// Outcome of [`gaussian_moment_test`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentTestReport {
    pub z_mean: Vec<f64>,
    pub z_variance: Vec<f64>,
    pub ess: Vec<f64>,
    pub pass: bool,
}

/// Compares each coordinate's mean and second moment after `burn_in` with
/// `(0, 1/λ_j)`. The `z`-scores use autocorrelation-adjusted standard errors;
/// passes iff every `|z| < 5`.
pub fn gaussian_moment_test(
    trace: &ChainTrace,
    eigs: &[f64],
    burn_in: usize,
) -> Result<MomentTestReport> {
    if trace.len() <= burn_in + 1 {
        return Err(Error::invalid(format!(
            "trace of length {} is too short for burn-in {burn_in}",
            trace.len()
        )));
    }
    let dim = trace.states[0].len();
    if eigs.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: eigs.len(),
        });
    }
    let mut z_mean = Vec::with_capacity(dim);
    let mut z_variance = Vec::with_capacity(dim);
    let mut ess = Vec::with_capacity(dim);
    for (j, &lambda) in eigs.iter().enumerate() {
        let xs: Vec<f64> = trace.states[burn_in..].iter().map(|s| s[j]).collect();
        let (zm, e) = mean_z(&xs, 0.0);
        let squares: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let (zv, _) = mean_z(&squares, 1.0 / lambda);
        z_mean.push(zm);
        z_variance.push(zv);
        ess.push(e);
    }
    let pass = z_mean
        .iter()
        .chain(&z_variance)
        .all(|z| z.abs() < MOMENT_Z_LIMIT);
    Ok(MomentTestReport {
        z_mean,
        z_variance,
        ess,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::CostLedger;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn trace_of(states: Vec<Vec<f64>>) -> ChainTrace {
        let n = states.len();
        ChainTrace {
            states,
            energies: vec![0.0; n],
            accepted: vec![true; n],
            ledger: CostLedger::default(),
            seed: 0,
        }
    }

    #[test]
    fn iid_samples_pass() {
        let mut passes = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, 0.5).unwrap();
            let states = (0..2000).map(|_| vec![normal.sample(&mut rng)]).collect();
            let r = gaussian_moment_test(&trace_of(states), &[4.0], 0).unwrap();
            passes += usize::from(r.pass);
        }
        assert!(passes >= 99);
    }

    #[test]
    fn constant_trace_fails() {
        let r = gaussian_moment_test(&trace_of(vec![vec![0.3]; 500]), &[1.0], 10).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn ess_of_iid_is_near_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..10_000).map(|_| normal.sample(&mut rng)).collect();
        let ess = effective_sample_size(&x).unwrap();
        assert!(ess > 8000.0 && ess < 12_000.0, "{ess}");
    }

    #[test]
    fn ess_of_ar1_matches_theory() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let rho: f64 = 0.9;
        let mut x = vec![0.0; 200_000];
        for i in 1..x.len() {
            x[i] = rho * x[i - 1] + normal.sample(&mut rng);
        }
        let ess = effective_sample_size(&x).unwrap();
        let expected = x.len() as f64 * (1.0 - rho) / (1.0 + rho);
        assert!((ess / expected - 1.0).abs() < 0.15, "{ess} vs {expected}");
    }

    #[test]
    fn raw_moments() {
        assert_eq!(gaussian_raw_moment(2, 2.0), 0.5);
        assert_eq!(gaussian_raw_moment(4, 1.0), 3.0);
        assert_eq!(gaussian_raw_moment(3, 1.0), 0.0);
    }
}
