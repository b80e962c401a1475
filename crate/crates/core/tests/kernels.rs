use hmc_lab::coupling::couple_kernels;
use hmc_lab::integrators::oracle_step_count;
use hmc_lab::kernels::{run_chain, transition, CostLedger};
use hmc_lab::metrics::{effective_sample_size, gaussian_moment_test};
use hmc_lab::potentials::{Gaussian, PerturbedQuadratic, Potential};
use hmc_lab::{IntegratorSpec, KernelKind, KernelSpec, MomentumSource};

fn exact_ideal(time: f64) -> KernelSpec {
    KernelSpec::new(KernelKind::Ideal, IntegratorSpec::exact(time)).unwrap()
}

#[test]
fn empty_run_returns_the_start() {
    let pot = Gaussian::standard(3).unwrap();
    let trace = run_chain(&pot, &exact_ideal(0.3), &[1.0, 2.0, 3.0], 0, 5).unwrap();
    assert_eq!(trace.states, vec![vec![1.0, 2.0, 3.0]]);
    assert_eq!(trace.len(), 1);
}

#[test]
fn identical_seeds_give_identical_traces() {
    let pot = PerturbedQuadratic::new(3, 0.1, 4).unwrap();
    let t = pot.bounds().default_time();
    for spec in [
        KernelSpec::ideal(t).unwrap(),
        KernelSpec::unadjusted(IntegratorSpec::euler(0.01, t).unwrap()).unwrap(),
        KernelSpec::metropolis(IntegratorSpec::leapfrog(0.02, t).unwrap()).unwrap(),
    ] {
        let a = run_chain(&pot, &spec, &[0.5, 0.0, -0.5], 200, 99).unwrap();
        let b = run_chain(&pot, &spec, &[0.5, 0.0, -0.5], 200, 99).unwrap();
        assert_eq!(a, b);
        let c = run_chain(&pot, &spec, &[0.5, 0.0, -0.5], 200, 100).unwrap();
        assert_ne!(a.states, c.states);
    }
}

#[test]
fn momenta_are_standard_normal() {
    let mut src = MomentumSource::new(3, 4);
    let n = 50_000;
    let draws: Vec<f64> = (0..n).flat_map(|_| src.next_momentum()).collect();
    let m = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / m;
    let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m;
    let kurt = draws.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / m / var.powi(2);
    assert!(mean.abs() < 5.0 / m.sqrt());
    assert!((var - 1.0).abs() < 5.0 * (2.0 / m).sqrt());
    assert!((kurt - 3.0).abs() < 5.0 * (24.0 / m).sqrt());
}

#[test]
fn ideal_gaussian_chain_is_centred() {
    let pot = Gaussian::new(vec![1.0, 4.0]).unwrap();
    let trace = run_chain(
        &pot,
        &exact_ideal(pot.bounds().default_time()),
        &[1.0, 1.0],
        100_000,
        12,
    )
    .unwrap();
    for j in 0..2 {
        let x = trace.coordinate(j);
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let ess = effective_sample_size(&x).unwrap();
        assert!(
            mean.abs() <= 4.0 * sd / ess.sqrt(),
            "coordinate {j}: mean {mean}, sd {sd}, ess {ess}"
        );
    }
}

#[test]
fn metropolis_leapfrog_passes_the_moment_test() {
    let pot = Gaussian::standard(1).unwrap();
    let spec = KernelSpec::metropolis(
        IntegratorSpec::leapfrog(0.05, pot.bounds().default_time()).unwrap(),
    )
    .unwrap();
    let trace = run_chain(&pot, &spec, &[0.0], 100_000, 21).unwrap();
    let report = gaussian_moment_test(&trace, &[1.0], 1000).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn gradient_evals_follow_the_oracle_count() {
    let pot = PerturbedQuadratic::new(2, 0.1, 1).unwrap();
    let t = pot.bounds().default_time();
    let steps = 37;
    for (spec, per_call, k) in [
        (
            KernelSpec::unadjusted(IntegratorSpec::euler(0.003, t).unwrap()).unwrap(),
            1,
            1,
        ),
        (
            KernelSpec::metropolis(IntegratorSpec::leapfrog(0.003, t).unwrap()).unwrap(),
            2,
            2,
        ),
    ] {
        let trace = run_chain(&pot, &spec, &[0.1, 0.2], steps, 8).unwrap();
        let n = oracle_step_count(t, 0.003, k) as u64;
        assert_eq!(trace.ledger.gradient_evals, steps as u64 * n * per_call);
        assert_eq!(trace.ledger.kernel_steps, steps as u64);
        let decisions = if spec.kind == KernelKind::Metropolis {
            steps as u64
        } else {
            0
        };
        assert_eq!(trace.ledger.accepted + trace.ledger.rejected, decisions);
    }
}

#[test]
fn shared_momenta_keep_unadjusted_chains_near_the_ideal_chain() {
    let pot = Gaussian::new(vec![1.0, 2.0, 4.0]).unwrap();
    let t = pot.bounds().default_time();
    let ideal = exact_ideal(t);
    let x0 = [0.5, -0.5, 1.0];
    let mut previous = f64::INFINITY;
    for theta in [1e-2, 1e-3, 1e-4] {
        let euler = KernelSpec::unadjusted(IntegratorSpec::euler(theta * t, t).unwrap()).unwrap();
        let d = couple_kernels(&pot, &euler, &ideal, &x0, &x0, 100, 31).unwrap();
        let worst = d.iter().copied().fold(0.0, f64::max);
        assert!(worst < previous, "theta {theta}: {worst} !< {previous}");
        previous = worst;
    }
    assert!(previous < 1e-2);
}

#[test]
fn one_transition_matches_the_step_functions() {
    let pot = Gaussian::standard(2).unwrap();
    let spec = exact_ideal(0.3);
    let mut ledger = CostLedger::default();
    let t = transition(&pot, &spec, &[1.0, 0.0], &[0.0, 0.0], 0.5, &mut ledger).unwrap();
    assert!(t.accepted);
    assert!((t.next[0] - 0.3f64.cos()).abs() <= 1e-15);
    assert_eq!(ledger.kernel_steps, 1);
}

#[test]
fn ideal_kernel_rejects_numerical_schemes() {
    assert!(KernelSpec::new(
        KernelKind::Ideal,
        IntegratorSpec::leapfrog(0.1, 1.0).unwrap()
    )
    .is_err());
}
