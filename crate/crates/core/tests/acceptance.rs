//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so every line is printed. Set
//! `HMC_LAB_ACCEPTANCE=1,4,9` to run a subset.

use std::f64::consts::SQRT_2;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hmc_lab::coupling::{
    contraction_certificate, couple_synchronous, drift_check, euler_bound_check,
    leapfrog_order_study, sandwich_check,
};
use hmc_lab::experiment::{run_scaling_study, ScalingConfig};
use hmc_lab::integrators::IntegratorSpec;
use hmc_lab::kernels::{run_chain, KernelSpec};
use hmc_lab::metrics::{gaussian_moment_test, w1_assignment, w1_exact_1d, SampleBatch};
use hmc_lab::potentials::{Gaussian, PerturbedQuadratic, Potential};
use hmc_lab::precondition::{build_rounding, verify_rounding};
use hmc_lab::Result;

const REFERENCE_TOL: f64 = 1e-10;

type Criterion = (usize, &'static str, fn() -> Result<Outcome>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn targets() -> Vec<(&'static str, Box<dyn Potential>)> {
    vec![
        (
            "gaussian[1,4]",
            Box::new(Gaussian::new(vec![1.0, 4.0]).unwrap()),
        ),
        (
            "perturbed(0.9,1.1) d=8",
            Box::new(PerturbedQuadratic::new(8, 0.1, 11).unwrap()),
        ),
    ]
}

fn criterion_1() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, pot) in targets() {
        let t = pot.bounds().default_time();
        let r = contraction_certificate(pot.as_ref(), t, 1000, 101, REFERENCE_TOL)?;
        pass &= r.pass;
        parts.push(format!(
            "{name}: worst {:.6} <= {:.6}+1e-6",
            r.worst_ratio, r.contraction
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_2() -> Result<Outcome> {
    let pot = Gaussian::standard(4)?;
    let spec = KernelSpec::new(
        hmc_lab::KernelKind::Ideal,
        IntegratorSpec::exact(1.0 / (2.0 * SQRT_2)),
    )?;
    let r = couple_synchronous(
        &pot,
        &spec,
        &[1.0, 0.5, -0.5, 2.0],
        &[-1.0, 0.0, 1.5, -0.5],
        200,
        202,
    )?;
    let violations = r.violations.unwrap_or(usize::MAX);
    let rate = r.fitted_rate.unwrap_or(f64::NAN);
    outcome(
        violations == 0 && rate <= 0.984375,
        format!("violations {violations}, fitted rate {rate:.6} <= 0.984375"),
    )
}

fn criterion_3() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, pot) in targets() {
        let t = pot.bounds().default_time();
        for n in [7usize, 70] {
            let r = euler_bound_check(
                pot.as_ref(),
                t / n as f64,
                t,
                500,
                303 + n as u64,
                REFERENCE_TOL,
            )?;
            pass &= r.pass();
            parts.push(format!(
                "{name} T/θ={n}: violations {}+{}, worst ratios energy {:.3} position {:.3}",
                r.energy_violations,
                r.position_violations,
                r.worst_energy_ratio,
                r.worst_position_ratio
            ));
        }
    }
    outcome(pass, parts.join("; "))
}

fn criterion_4() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, pot) in targets() {
        let s = leapfrog_order_study(
            pot.as_ref(),
            1.0,
            &[10, 32, 100, 316],
            20,
            404,
            REFERENCE_TOL,
        )?;
        let ok = (s.position_slope - 1.0).abs() <= 0.2 && (s.energy_slope - 1.0).abs() <= 0.2;
        pass &= ok;
        parts.push(format!(
            "{name}: position slope {:.3}, energy slope {:.3}",
            s.position_slope, s.energy_slope
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_5() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, pot) in targets() {
        let t = pot.bounds().default_time();
        let r = sandwich_check(pot.as_ref(), t, 200, 20, 505, REFERENCE_TOL)?;
        pass &= r.pass();
        parts.push(format!(
            "{name}: {} checks, violations upper {} lower {}, worst excess upper {:.2e} lower {:.2e}",
            r.upper.evaluations, r.upper.violations, r.lower.violations, r.upper.worst_excess, r.lower.worst_excess
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_6() -> Result<Outcome> {
    let pot = Gaussian::standard(4)?;
    let spec = KernelSpec::new(
        hmc_lab::KernelKind::Ideal,
        IntegratorSpec::exact(pot.bounds().default_time()),
    )?;
    let radii = [5.0, 10.0, 20.0, 40.0];
    let r = drift_check(&pot, &spec, &radii, 10_000, 606)?;
    outcome(
        r.pass(),
        format!(
            "log Â {:.3}, feasible {}, slope at r=40 {:.4} (se {:.1e}) vs e^-1 = {:.4}",
            r.log_intercept,
            r.feasible,
            r.slope,
            r.slope_std_error,
            (-1.0f64).exp()
        ),
    )
}

fn criterion_7() -> Result<Outcome> {
    let pot = Gaussian::standard(1)?;
    let t = pot.bounds().default_time();
    let spec = KernelSpec::metropolis(IntegratorSpec::leapfrog(0.01, t)?)?;
    let trace = run_chain(&pot, &spec, &[0.0], 1_000_000, 707)?;
    let m = gaussian_moment_test(&trace, &[1.0], 1000)?;
    let exact = KernelSpec::metropolis(IntegratorSpec::exact(t))?;
    let et = run_chain(&pot, &exact, &[0.3], 100_000, 708)?;
    let rate = et.ledger.acceptance_rate().unwrap_or(0.0);
    outcome(
        m.pass && rate == 1.0,
        format!(
            "z mean {:.2}, z var {:.2}, ESS {:.0}, leapfrog acceptance {:.4}; exact-flow acceptance {rate}",
            m.z_mean[0],
            m.z_variance[0],
            m.ess[0],
            trace.ledger.acceptance_rate().unwrap_or(0.0)
        ),
    )
}

fn criterion_8() -> Result<Outcome> {
    let pot = PerturbedQuadratic::new(4, 0.1, 8)?;
    let spec = KernelSpec::metropolis(IntegratorSpec::leapfrog(
        0.005,
        pot.bounds().default_time(),
    )?)?;
    let trace = run_chain(&pot, &spec, &[0.0; 4], 10_000, 808)?;
    let bulk: Vec<Vec<f64>> = trace
        .states
        .iter()
        .skip(100)
        .step_by(99)
        .take(100)
        .cloned()
        .collect();
    let t = build_rounding(&pot, &[0.0; 4])?;
    let r = verify_rounding(&pot, &t, &bulk)?;
    let mut pass = r.pass && r.points == 100;
    let mut detail = format!(
        "perturbed: eigenvalues [{:.4}, {:.4}] within [{:.4}, {:.4}] at {} points",
        r.min_eigenvalue, r.max_eigenvalue, r.lower, r.upper, r.points
    );
    for eigs in [vec![1.0, 100.0], vec![1.0, 4.0, 9.0]] {
        let g = Gaussian::new(eigs.clone())?;
        let anchor: Vec<f64> = (0..eigs.len()).map(|i| 0.5 - i as f64).collect();
        let tg = build_rounding(&g, &anchor)?;
        let rg = verify_rounding(
            &g,
            &tg,
            &bulk
                .iter()
                .map(|p| p[..eigs.len()].to_vec())
                .collect::<Vec<_>>(),
        )?;
        let spread = rg.spread();
        pass &= rg.pass && (spread - 1.0).abs() <= 1e-12;
        detail.push_str(&format!("; gaussian{eigs:?}: ratio {spread:.15}"));
    }
    outcome(pass, detail)
}

fn criterion_9() -> Result<Outcome> {
    let dims = vec![4, 8, 16, 32, 64, 128, 256];
    let eps = 0.005;
    let euler = run_scaling_study(&ScalingConfig::standard(
        "euler",
        dims.clone(),
        eps,
        200,
        909,
    ))?;
    let leap = run_scaling_study(&ScalingConfig::standard("leapfrog", dims, eps, 200, 909))?;
    let se = euler.slope.unwrap_or(f64::NAN);
    let sl = leap.slope.unwrap_or(f64::NAN);
    let below = euler
        .rows
        .iter()
        .zip(&leap.rows)
        .filter(|(e, _)| e.dim >= 16)
        .all(|(e, l)| l.gradient_evals < e.gradient_evals);
    let counts = |r: &hmc_lab::experiment::ScalingResult| {
        r.rows
            .iter()
            .map(|x| x.oracle_steps.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    outcome(
        (0.35..=0.65).contains(&se) && (0.10..=0.40).contains(&sl) && below,
        format!(
            "euler slope {se:.3} ± {:.3} (steps {}), leapfrog slope {sl:.3} ± {:.3} (steps {}), leapfrog below euler for d>=16: {below}",
            euler.slope_std_error.unwrap_or(f64::NAN),
            counts(&euler),
            leap.slope_std_error.unwrap_or(f64::NAN),
            counts(&leap)
        ),
    )
}

fn brute_force_w1(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    fn permute(k: usize, perm: &mut Vec<usize>, a: &[Vec<f64>], b: &[Vec<f64>], best: &mut f64) {
        if k == perm.len() {
            let total: f64 = perm
                .iter()
                .enumerate()
                .map(|(i, &j)| hmc_lab::linalg::dist(&a[i], &b[j]))
                .sum();
            *best = best.min(total);
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            permute(k + 1, perm, a, b, best);
            perm.swap(k, i);
        }
    }
    let mut perm: Vec<usize> = (0..a.len()).collect();
    let mut best = f64::INFINITY;
    permute(0, &mut perm, a, b, &mut best);
    best / a.len() as f64
}

fn criterion_10() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst_nd = 0.0f64;
    let mut worst_1d = 0.0f64;
    let instances = 600;
    for _ in 0..instances {
        let n = rng.random_range(1..=7);
        let d = rng.random_range(1..=3);
        let mut draw = || -> Vec<Vec<f64>> {
            (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect()
        };
        let a = draw();
        let b = draw();
        let w = w1_assignment(&SampleBatch::new(a.clone())?, &SampleBatch::new(b.clone())?)?;
        worst_nd = worst_nd.max((w - brute_force_w1(&a, &b)).abs());
        if d == 1 {
            let a1: Vec<f64> = a.iter().map(|p| p[0]).collect();
            let b1: Vec<f64> = b.iter().map(|p| p[0]).collect();
            worst_1d = worst_1d.max((w - w1_exact_1d(&a1, &b1)?).abs());
        }
    }
    outcome(
        worst_nd <= 1e-12 && worst_1d <= 1e-12,
        format!("{instances} instances: max gap to brute force {worst_nd:.1e}, to sorted 1-d {worst_1d:.1e}"),
    )
}

fn main() -> ExitCode {
    hmc_lab::parallel::init_from_env();
    let selected: Option<Vec<usize>> = std::env::var("HMC_LAB_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let criteria: [Criterion; 10] = [
        (1, "deterministic contraction", criterion_1),
        (2, "coupled-chain rate", criterion_2),
        (3, "Euler error bounds", criterion_3),
        (4, "leapfrog order", criterion_4),
        (5, "sandwich bounds", criterion_5),
        (6, "drift", criterion_6),
        (7, "Metropolis exactness", criterion_7),
        (8, "preconditioning", criterion_8),
        (9, "dimension scaling", criterion_9),
        (10, "metric oracle equivalence", criterion_10),
    ];
    let mut failures = 0;
    for (id, name, run) in criteria {
        if selected.as_ref().is_some_and(|s| !s.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!pass);
        println!(
            "criterion {id:>2} [{name}]: {} ({:.1}s) {detail}",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
