//! Hamiltonian Monte Carlo for strongly log-concave targets.
//!
//! The crate is split along the lines of the sampler itself:
//!
//! * [`potentials`] holds the target interface and the shipped target zoo.
//! * [`integrators`] implements the flow maps: exact Gaussian flow, the Euler
//!   and leapfrog oracles, the composed integrator, a converged reference flow
//!   and the guarded integrator that switches on a good set.
//! * [`kernels`] builds the ideal, unadjusted and Metropolis-adjusted HMC
//!   transition kernels on top of a shared momentum stream, so two chains can
//!   be coupled by handing them the same stream.
//! * [`coupling`] is the verification lab: synchronous couplings, contraction
//!   certificates, drift estimates and good-set exit statistics.
//! * [`metrics`] provides Wasserstein-1 estimators and stationarity tests.
//! * [`precondition`] computes rounding transforms from a single Hessian.
//! * [`experiment`] wires everything to JSON configs, CSV output and the
//!   dimension-scaling study used by the `hmc-lab` binary.

pub mod bounds;
pub mod coupling;
mod error;
pub mod experiment;
pub mod integrators;
pub mod kernels;
pub mod linalg;
pub mod metrics;
pub mod parallel;
pub mod potentials;
pub mod precondition;

pub use error::{Error, Result};
pub use integrators::{IntegratorSpec, PhasePoint, Scheme};
pub use kernels::{ChainTrace, CostLedger, KernelKind, KernelSpec, MomentumSource};
pub use potentials::{ConvexityBounds, Potential};
