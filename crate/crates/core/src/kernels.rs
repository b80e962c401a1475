//! HMC transition kernels in random-mapping form.
//!
//! A kernel step is a deterministic function of the current state, a fresh
//! standard Gaussian momentum and (for the Metropolis kernel) a uniform
//! variate. Both variates come from a [`MomentumSource`], so two chains that
//! share a source are synchronously coupled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::integrators::{
    hamiltonian, ideal_flow, integrate, IntegratorSpec, PhasePoint, Scheme, REFERENCE_DEFAULT_TOL,
};
use crate::potentials::Potential;
use crate::{Error, Result};

const UNIFORM_STREAM: u64 = 1;

/// Deterministic stream of i.i.d. `N(0, I_d)` momenta plus a second,
/// independent stream of `Unif[0, 1)` acceptance variates.
#[derive(Debug, Clone)]
pub struct MomentumSource {
    seed: u64,
    dim: usize,
    momenta: ChaCha8Rng,
    uniforms: ChaCha8Rng,
}

impl MomentumSource {
    pub fn new(seed: u64, dim: usize) -> Self {
        let momenta = ChaCha8Rng::seed_from_u64(seed);
        let mut uniforms = ChaCha8Rng::seed_from_u64(seed);
        uniforms.set_stream(UNIFORM_STREAM);
        Self {
            seed,
            dim,
            momenta,
            uniforms,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn next_momentum(&mut self) -> Vec<f64> {
        let mut p = vec![0.0; self.dim];
        self.fill_momentum(&mut p);
        p
    }

    pub fn fill_momentum(&mut self, p: &mut [f64]) {
        for v in p.iter_mut() {
            *v = self.momenta.sample(StandardNormal);
        }
    }

    pub fn next_uniform(&mut self) -> f64 {
        self.uniforms.random()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// Exact (or reference) flow, no correction.
    Ideal,
    /// Numerical flow, no correction.
    Unadjusted,
    /// Numerical flow with a Metropolis accept/reject step.
    Metropolis,
}

impl KernelKind {
    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Ideal => "ideal",
            KernelKind::Unadjusted => "unadjusted",
            KernelKind::Metropolis => "metropolis",
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(KernelKind::Ideal),
            "unadjusted" => Ok(KernelKind::Unadjusted),
            "metropolis" => Ok(KernelKind::Metropolis),
            other => Err(Error::invalid(format!("unknown kernel kind `{other}`"))),
        }
    }
}

/// Kernel kind plus the flow map it uses. The integration time is the
/// integrator's `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub integrator: IntegratorSpec,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, integrator: IntegratorSpec) -> Result<Self> {
        integrator.validate()?;
        if kind == KernelKind::Ideal
            && !matches!(
                integrator.scheme,
                Scheme::ExactGaussian | Scheme::Reference { .. }
            )
        {
            return Err(Error::invalid(
                "the ideal kernel uses the exact Gaussian or the reference flow",
            ));
        }
        Ok(Self { kind, integrator })
    }

    /// Ideal HMC with integration time `time`; the flow is exact on
    /// Gaussians and the reference flow elsewhere.
    pub fn ideal(time: f64) -> Result<Self> {
        Self::new(
            KernelKind::Ideal,
            IntegratorSpec::reference(REFERENCE_DEFAULT_TOL, time)?,
        )
    }

    pub fn unadjusted(integrator: IntegratorSpec) -> Result<Self> {
        Self::new(KernelKind::Unadjusted, integrator)
    }

    pub fn metropolis(integrator: IntegratorSpec) -> Result<Self> {
        Self::new(KernelKind::Metropolis, integrator)
    }

    pub fn time(&self) -> f64 {
        self.integrator.time
    }

    fn ideal_tol(&self) -> f64 {
        match self.integrator.scheme {
            Scheme::Reference { tol } => tol,
            _ => REFERENCE_DEFAULT_TOL,
        }
    }
}

/// Work counters; `gradient_evals` realizes the cost `N(Q, s)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub gradient_evals: u64,
    pub kernel_steps: u64,
    /// Metropolis decisions; both stay zero for the other kernels.
    pub accepted: u64,
    pub rejected: u64,
}

impl CostLedger {
    pub fn merge(&mut self, other: &CostLedger) {
        self.gradient_evals += other.gradient_evals;
        self.kernel_steps += other.kernel_steps;
        self.accepted += other.accepted;
        self.rejected += other.rejected;
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        let n = self.accepted + self.rejected;
        (n > 0).then(|| self.accepted as f64 / n as f64)
    }
}

/// Outcome of one kernel step.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub next: Vec<f64>,
    pub accepted: bool,
    /// `H` at the integrator's end point.
    pub proposal_energy: f64,
}

/// Ideal HMC: position of the exact (or reference) flow from `(x, p)` at time `T`.
pub fn ideal_step(pot: &dyn Potential, time: f64, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    let start = PhasePoint::new(x.to_vec(), p.to_vec())?;
    Ok(ideal_flow(pot, &start, time, REFERENCE_DEFAULT_TOL)?.end.q)
}

/// Unadjusted HMC: position output of the numerical flow.
pub fn unadjusted_step(
    pot: &dyn Potential,
    spec: &KernelSpec,
    x: &[f64],
    p: &[f64],
    ledger: &mut CostLedger,
) -> Result<Vec<f64>> {
    let start = PhasePoint::new(x.to_vec(), p.to_vec())?;
    let flow = integrate(pot, &spec.integrator, &start)?;
    ledger.gradient_evals += flow.gradient_evals;
    ledger.kernel_steps += 1;
    Ok(flow.end.q)
}

/// Metropolis-adjusted HMC: accept the flow's end point iff
/// `u < min(1, exp(H(x, p) − H(q', p')))`.
pub fn metropolis_step(
    pot: &dyn Potential,
    spec: &KernelSpec,
    x: &[f64],
    p: &[f64],
    u: f64,
    ledger: &mut CostLedger,
) -> Result<(Vec<f64>, bool)> {
    let t = metropolis_transition(pot, spec, x, p, u, ledger)?;
    Ok((t.next, t.accepted))
}

fn metropolis_transition(
    pot: &dyn Potential,
    spec: &KernelSpec,
    x: &[f64],
    p: &[f64],
    u: f64,
    ledger: &mut CostLedger,
) -> Result<Transition> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::invalid(format!(
            "acceptance variate must lie in [0, 1], got {u}"
        )));
    }
    let start = PhasePoint::new(x.to_vec(), p.to_vec())?;
    let flow = integrate(pot, &spec.integrator, &start)?;
    ledger.gradient_evals += flow.gradient_evals;
    ledger.kernel_steps += 1;
    let h0 = hamiltonian(pot, x, p);
    let h1 = flow.end.hamiltonian(pot);
    let log_ratio = h0 - h1;
    // min(1, e^{ΔH}) = 1 whenever ΔH ≥ 0, so such proposals are accepted for
    // every u in [0, 1].
    let accepted = h1.is_finite() && (log_ratio >= 0.0 || u < log_ratio.exp());
    if accepted {
        ledger.accepted += 1;
    } else {
        ledger.rejected += 1;
    }
    Ok(Transition {
        next: if accepted { flow.end.q } else { x.to_vec() },
        accepted,
        proposal_energy: h1,
    })
}

/// One step of whichever kernel `spec` names.
pub fn transition(
    pot: &dyn Potential,
    spec: &KernelSpec,
    x: &[f64],
    p: &[f64],
    u: f64,
    ledger: &mut CostLedger,
) -> Result<Transition> {
    match spec.kind {
        KernelKind::Ideal => {
            let start = PhasePoint::new(x.to_vec(), p.to_vec())?;
            let flow = ideal_flow(pot, &start, spec.time(), spec.ideal_tol())?;
            ledger.gradient_evals += flow.gradient_evals;
            ledger.kernel_steps += 1;
            Ok(Transition {
                proposal_energy: flow.end.hamiltonian(pot),
                next: flow.end.q,
                accepted: true,
            })
        }
        KernelKind::Unadjusted => {
            let start = PhasePoint::new(x.to_vec(), p.to_vec())?;
            let flow = integrate(pot, &spec.integrator, &start)?;
            ledger.gradient_evals += flow.gradient_evals;
            ledger.kernel_steps += 1;
            Ok(Transition {
                proposal_energy: flow.end.hamiltonian(pot),
                next: flow.end.q,
                accepted: true,
            })
        }
        KernelKind::Metropolis => metropolis_transition(pot, spec, x, p, u, ledger),
    }
}

/// A running chain: current state, its momentum source and ledger.
#[derive(Debug, Clone)]
pub struct Chain<'a> {
    pot: &'a dyn Potential,
    spec: KernelSpec,
    state: Vec<f64>,
    source: MomentumSource,
    ledger: CostLedger,
}

impl<'a> Chain<'a> {
    pub fn new(pot: &'a dyn Potential, spec: KernelSpec, x0: Vec<f64>, seed: u64) -> Result<Self> {
        if x0.len() != pot.dim() {
            return Err(Error::DimensionMismatch {
                expected: pot.dim(),
                actual: x0.len(),
            });
        }
        Ok(Self {
            pot,
            spec,
            source: MomentumSource::new(seed, pot.dim()),
            state: x0,
            ledger: CostLedger::default(),
        })
    }

    pub fn step(&mut self) -> Result<Transition> {
        let p = self.source.next_momentum();
        let u = self.source.next_uniform();
        let t = transition(self.pot, &self.spec, &self.state, &p, u, &mut self.ledger)?;
        self.state.clone_from(&t.next);
        Ok(t)
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn ledger(&self) -> &CostLedger {
        &self.ledger
    }
}

/// Output of [`run_chain`]: `X_0, …, X_{i_max}` and per-step diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    pub states: Vec<Vec<f64>>,
    /// Entry `i ≥ 1` is `H` at the integrator end point of the transition
    /// into `X_i`; entry 0 is `U(X_0)`.
    pub energies: Vec<f64>,
    /// Entry `i ≥ 1` records whether the transition into `X_i` accepted;
    /// always true for the uncorrected kernels.
    pub accepted: Vec<bool>,
    pub ledger: CostLedger,
    pub seed: u64,
}

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Values of coordinate `j` along the chain.
    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[j]).collect()
    }
}

/// Runs `i_max` steps of the kernel from `x0` with a fresh momentum source.
pub fn run_chain(
    pot: &dyn Potential,
    spec: &KernelSpec,
    x0: &[f64],
    i_max: usize,
    seed: u64,
) -> Result<ChainTrace> {
    let mut chain = Chain::new(pot, *spec, x0.to_vec(), seed)?;
    let mut states = Vec::with_capacity(i_max + 1);
    let mut energies = Vec::with_capacity(i_max + 1);
    let mut accepted = Vec::with_capacity(i_max + 1);
    states.push(x0.to_vec());
    energies.push(pot.value(x0));
    accepted.push(true);
    for _ in 0..i_max {
        let t = chain.step()?;
        energies.push(t.proposal_energy);
        accepted.push(t.accepted);
        states.push(t.next);
    }
    Ok(ChainTrace {
        states,
        energies,
        accepted,
        ledger: chain.ledger,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{Gaussian, PerturbedQuadratic};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn ideal_step_examples() {
        let u = Gaussian::new(vec![1.0]).unwrap();
        assert!(ideal_step(&u, FRAC_PI_2, &[1.0], &[0.0]).unwrap()[0].abs() < 1e-15);
        assert_eq!(ideal_step(&u, 0.0, &[0.8], &[2.0]).unwrap(), vec![0.8]);
        assert!((ideal_step(&u, FRAC_PI_2, &[0.0], &[1.0]).unwrap()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_euler_step_kernel() {
        let u = Gaussian::new(vec![2.0, 3.0]).unwrap();
        let t = 0.25;
        let spec = KernelSpec::unadjusted(IntegratorSpec::euler(t, t).unwrap()).unwrap();
        let mut ledger = CostLedger::default();
        let next = unadjusted_step(&u, &spec, &[1.0, -1.0], &[0.5, 2.0], &mut ledger).unwrap();
        assert_eq!(next, vec![1.0 + 0.5 * t, -1.0 + 2.0 * t]);
        assert_eq!(ledger.gradient_evals, 1);
    }

    #[test]
    fn unadjusted_approaches_ideal() {
        let u = PerturbedQuadratic::new(2, 0.1, 9).unwrap();
        let (x, p) = ([0.5, -0.3], [1.0, 0.2]);
        let ideal = ideal_step(&u, 0.3, &x, &p).unwrap();
        let mut ledger = CostLedger::default();
        let mut prev = f64::INFINITY;
        for &theta in &[1e-2, 1e-4, 1e-6] {
            let spec =
                KernelSpec::unadjusted(IntegratorSpec::leapfrog(theta, 0.3).unwrap()).unwrap();
            let got = unadjusted_step(&u, &spec, &x, &p, &mut ledger).unwrap();
            let err = crate::linalg::dist(&got, &ideal);
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn ledger_counts_steps() {
        let u = Gaussian::new(vec![1.0; 3]).unwrap();
        let spec = KernelSpec::unadjusted(IntegratorSpec::leapfrog(0.01, 0.35).unwrap()).unwrap();
        let trace = run_chain(&u, &spec, &[0.0; 3], 7, 1).unwrap();
        assert_eq!(trace.ledger.kernel_steps, 7);
        assert_eq!(trace.ledger.gradient_evals, 7 * 4 * 2);
    }

    #[test]
    fn metropolis_acceptance_rules() {
        let u = Gaussian::new(vec![1.0]).unwrap();
        let exact = KernelSpec::metropolis(IntegratorSpec::exact(0.7)).unwrap();
        let mut ledger = CostLedger::default();
        for &v in &[0.0, 0.5, 0.999] {
            let (_, acc) = metropolis_step(&u, &exact, &[1.3], &[-0.4], v, &mut ledger).unwrap();
            assert!(acc);
        }
        // A coarse Euler step gains energy; u = 0 still accepts.
        let coarse = KernelSpec::metropolis(IntegratorSpec::euler(0.5, 1.0).unwrap()).unwrap();
        let (_, acc) = metropolis_step(&u, &coarse, &[2.0], &[2.0], 0.0, &mut ledger).unwrap();
        assert!(acc);
        let (next, acc) =
            metropolis_step(&u, &coarse, &[2.0], &[2.0], 0.999_999, &mut ledger).unwrap();
        assert!(!acc);
        assert_eq!(next, vec![2.0]);
        assert!(metropolis_step(&u, &coarse, &[2.0], &[2.0], 1.5, &mut ledger).is_err());
    }

    #[test]
    fn energy_lowering_proposals_are_accepted() {
        // Start high on the potential with zero momentum; the Euler flow
        // moves downhill and this proposal lowers H.
        let u = Gaussian::new(vec![1.0]).unwrap();
        let spec = KernelSpec::metropolis(IntegratorSpec::leapfrog(0.01, 0.3).unwrap()).unwrap();
        let mut ledger = CostLedger::default();
        let start = PhasePoint::new(vec![3.0], vec![0.0]).unwrap();
        let end = integrate(&u, &spec.integrator, &start).unwrap().end;
        if end.hamiltonian(&u) <= start.hamiltonian(&u) {
            let (_, acc) = metropolis_step(&u, &spec, &[3.0], &[0.0], 1.0, &mut ledger).unwrap();
            assert!(acc);
        }
    }

    #[test]
    fn empty_run_and_determinism() {
        let u = Gaussian::new(vec![1.0, 2.0]).unwrap();
        let spec = KernelSpec::metropolis(IntegratorSpec::leapfrog(0.04, 0.5).unwrap()).unwrap();
        let t0 = run_chain(&u, &spec, &[0.1, 0.2], 0, 5).unwrap();
        assert_eq!(t0.states, vec![vec![0.1, 0.2]]);
        let a = run_chain(&u, &spec, &[0.1, 0.2], 50, 5).unwrap();
        let b = run_chain(&u, &spec, &[0.1, 0.2], 50, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 51);
    }

    #[test]
    fn ideal_kind_rejects_numerical_schemes() {
        assert!(
            KernelSpec::new(KernelKind::Ideal, IntegratorSpec::euler(0.1, 1.0).unwrap()).is_err()
        );
    }

    #[test]
    fn momentum_source_is_reproducible() {
        let mut a = MomentumSource::new(42, 3);
        let mut b = MomentumSource::new(42, 3);
        for _ in 0..10 {
            assert_eq!(a.next_momentum(), b.next_momentum());
            assert_eq!(a.next_uniform().to_bits(), b.next_uniform().to_bits());
        }
    }
}
