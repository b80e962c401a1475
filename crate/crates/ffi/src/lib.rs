//! C ABI for `hmc-lab`.
//!
//! Potentials are opaque handles created by `hmc_potential_*` constructors and
//! released with [`hmc_potential_free`]. Every fallible call returns an
//! [`HmcStatus`]; on failure the message is kept per thread and can be copied
//! out with [`hmc_last_error_message`]. Arrays are passed as pointer plus
//! length, row-major for point sets.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use hmc_lab::coupling::contraction_certificate;
use hmc_lab::kernels::run_chain;
use hmc_lab::metrics::{w1_assignment, w1_exact_1d, SampleBatch};
use hmc_lab::potentials::{Gaussian, PerturbedQuadratic, Potential};
use hmc_lab::{Error, IntegratorSpec, KernelKind, KernelSpec, Scheme};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HmcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotGaussian = 4,
    NotConverged = 5,
    NotPositiveDefinite = 6,
    NonFinite = 7,
    Internal = 8,
    Panic = 9,
}

/// Transition kernel selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HmcKernelKind {
    Ideal = 0,
    Unadjusted = 1,
    Metropolis = 2,
}

/// Flow map selector. For `HMC_SCHEME_REFERENCE` the `theta` argument is the
/// convergence tolerance.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HmcScheme {
    ExactGaussian = 0,
    Euler = 1,
    Leapfrog = 2,
    Reference = 3,
}

/// Opaque potential handle.
pub struct HmcPotential {
    inner: Arc<dyn Potential>,
}

/// Outcome of [`hmc_contraction_certificate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HmcCertificate {
    pub trials: usize,
    pub worst_ratio: f64,
    pub contraction: f64,
    pub pass: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HmcStatus {
    match e {
        Error::InvalidArgument(_) | Error::Config { .. } | Error::DegenerateCoupling => {
            HmcStatus::InvalidArgument
        }
        Error::DimensionMismatch { .. } => HmcStatus::DimensionMismatch,
        Error::NotGaussian => HmcStatus::NotGaussian,
        Error::NotConverged { .. } | Error::SearchExhausted { .. } => HmcStatus::NotConverged,
        Error::NotPositiveDefinite(_) => HmcStatus::NotPositiveDefinite,
        Error::NonFinite(_) => HmcStatus::NonFinite,
        _ => HmcStatus::Internal,
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> HmcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => HmcStatus::Ok,
        Ok(Err(Failure::Null(name))) => {
            set_last_error(format!("null pointer passed as `{name}`"));
            HmcStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".to_string());
            HmcStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(
    p: *mut f64,
    len: usize,
    name: &'static str,
) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a>(pot: *const HmcPotential) -> Result<&'a HmcPotential, Failure> {
    pot.as_ref().ok_or(Failure::Null("pot"))
}

unsafe fn write<T>(out: *mut T, value: T, name: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(name));
    }
    out.write(value);
    Ok(())
}

fn points(flat: &[f64], dim: usize) -> Result<SampleBatch, Failure> {
    if dim == 0 || !flat.len().is_multiple_of(dim) {
        return Err(Error::InvalidArgument(format!(
            "{} values do not form points of dimension {dim}",
            flat.len()
        ))
        .into());
    }
    Ok(SampleBatch::new(
        flat.chunks(dim).map(<[f64]>::to_vec).collect(),
    )?)
}

fn check_dim(expected: usize, actual: usize) -> Result<(), Failure> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual }.into());
    }
    Ok(())
}

fn boxed(out: *mut *mut HmcPotential, inner: Arc<dyn Potential>) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    unsafe { out.write(Box::into_raw(Box::new(HmcPotential { inner }))) };
    Ok(())
}

/// Copies the last error message of the calling thread into `buf`,
/// NUL-terminated and truncated to `len` bytes. Returns the full message
/// length excluding the terminator, or 0 when no error has been recorded.
///
/// # Safety
/// `buf` must be null or valid for `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hmc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let slot = slot.borrow();
        let Some(msg) = slot.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Creates the Gaussian potential `U(q) = ½ Σ λ_i q_i²`.
///
/// # Safety
/// `eigenvalues` must point to `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hmc_potential_gaussian(
    eigenvalues: *const f64,
    dim: usize,
    out: *mut *mut HmcPotential,
) -> HmcStatus {
    guard(|| {
        let eigs = slice(eigenvalues, dim, "eigenvalues")?;
        boxed(out, Arc::new(Gaussian::new(eigs.to_vec())?))
    })
}

/// Creates the perturbed quadratic with Hessian spectrum inside
/// `[1 − amplitude, 1 + amplitude]`; `seed` fixes its random phases.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hmc_potential_perturbed(
    dim: usize,
    amplitude: f64,
    seed: u64,
    out: *mut *mut HmcPotential,
) -> HmcStatus {
    guard(|| {
        boxed(
            out,
            Arc::new(PerturbedQuadratic::new(dim, amplitude, seed)?),
        )
    })
}

/// Releases a potential. Null is ignored.
///
/// # Safety
/// `pot` must come from an `hmc_potential_*` constructor and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn hmc_potential_free(pot: *mut HmcPotential) {
    if !pot.is_null() {
        drop(Box::from_raw(pot));
    }
}

/// Dimension of the potential, or 0 for a null handle.
///
/// # Safety
/// `pot` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hmc_potential_dim(pot: *const HmcPotential) -> usize {
    pot.as_ref().map_or(0, |p| p.inner.dim())
}

/// Writes the convexity bounds `m2` and `M2`.
///
/// # Safety
/// `pot` must be a live handle; `m2` and `big_m2` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hmc_potential_bounds(
    pot: *const HmcPotential,
    m2: *mut f64,
    big_m2: *mut f64,
) -> HmcStatus {
    guard(|| {
        let b = handle(pot)?.inner.bounds();
        write(m2, b.m2, "m2")?;
        write(big_m2, b.big_m2, "big_m2")
    })
}

/// Evaluates `U(q)`.
///
/// # Safety
/// `q` must point to `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hmc_potential_value(
    pot: *const HmcPotential,
    q: *const f64,
    dim: usize,
    out: *mut f64,
) -> HmcStatus {
    guard(|| {
        let p = handle(pot)?;
        check_dim(p.inner.dim(), dim)?;
        let q = slice(q, dim, "q")?;
        write(out, p.inner.value(q), "out")
    })
}

/// Evaluates `∇U(q)` into `grad`.
///
/// # Safety
/// `q` and `grad` must each point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn hmc_potential_gradient(
    pot: *const HmcPotential,
    q: *const f64,
    dim: usize,
    grad: *mut f64,
) -> HmcStatus {
    guard(|| {
        let p = handle(pot)?;
        check_dim(p.inner.dim(), dim)?;
        let q = slice(q, dim, "q")?;
        let g = slice_mut(grad, dim, "grad")?;
        p.inner.gradient_into(q, g);
        Ok(())
    })
}

/// Runs `steps` transitions from `x0` and writes all `steps + 1` states,
/// row-major, into `states` (length `(steps + 1) * dim`). A non-positive
/// `time` selects the default integration time of the potential. The number
/// of accepted proposals and gradient evaluations go to the optional
/// `accepted` and `gradient_evals` outputs.
///
/// # Safety
/// `x0` must point to `dim` doubles and `states` to `(steps + 1) * dim`
/// writable doubles. `accepted` and `gradient_evals` may be null.
#[no_mangle]
pub unsafe extern "C" fn hmc_run_chain(
    pot: *const HmcPotential,
    kind: HmcKernelKind,
    scheme: HmcScheme,
    theta: f64,
    time: f64,
    x0: *const f64,
    dim: usize,
    steps: usize,
    seed: u64,
    states: *mut f64,
    accepted: *mut u64,
    gradient_evals: *mut u64,
) -> HmcStatus {
    guard(|| {
        let p = handle(pot)?;
        check_dim(p.inner.dim(), dim)?;
        let x0 = slice(x0, dim, "x0")?;
        let total = steps
            .checked_add(1)
            .and_then(|n| n.checked_mul(dim))
            .ok_or_else(|| Error::InvalidArgument("state buffer size overflows".into()))?;
        let out = slice_mut(states, total, "states")?;
        let time = if time > 0.0 {
            time
        } else {
            p.inner.bounds().default_time()
        };
        let scheme = match scheme {
            HmcScheme::ExactGaussian => Scheme::ExactGaussian,
            HmcScheme::Euler => Scheme::Euler,
            HmcScheme::Leapfrog => Scheme::Leapfrog,
            HmcScheme::Reference => Scheme::Reference { tol: theta },
        };
        let kind = match kind {
            HmcKernelKind::Ideal => KernelKind::Ideal,
            HmcKernelKind::Unadjusted => KernelKind::Unadjusted,
            HmcKernelKind::Metropolis => KernelKind::Metropolis,
        };
        let theta = if matches!(scheme, Scheme::ExactGaussian) {
            1.0
        } else {
            theta
        };
        let spec = KernelSpec::new(kind, IntegratorSpec::new(scheme, theta, time)?)?;
        let trace = run_chain(p.inner.as_ref(), &spec, x0, steps, seed)?;
        for (row, state) in out.chunks_mut(dim.max(1)).zip(&trace.states) {
            row.copy_from_slice(state);
        }
        if !accepted.is_null() {
            accepted.write(trace.ledger.accepted);
        }
        if !gradient_evals.is_null() {
            gradient_evals.write(trace.ledger.gradient_evals);
        }
        Ok(())
    })
}

/// Exact `W1` between two one-dimensional samples of equal size.
///
/// # Safety
/// `a` and `b` must each point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hmc_w1_exact_1d(
    a: *const f64,
    b: *const f64,
    n: usize,
    out: *mut f64,
) -> HmcStatus {
    guard(|| {
        let w = w1_exact_1d(slice(a, n, "a")?, slice(b, n, "b")?)?;
        write(out, w, "out")
    })
}

/// Exact `W1` between two equally weighted point sets of `n` points in
/// dimension `dim`, by optimal assignment.
///
/// # Safety
/// `a` and `b` must each point to `n * dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hmc_w1_assignment(
    a: *const f64,
    b: *const f64,
    n: usize,
    dim: usize,
    out: *mut f64,
) -> HmcStatus {
    guard(|| {
        let len = n
            .checked_mul(dim)
            .ok_or_else(|| Error::InvalidArgument("point buffer size overflows".into()))?;
        let a = points(slice(a, len, "a")?, dim)?;
        let b = points(slice(b, len, "b")?, dim)?;
        write(out, w1_assignment(&a, &b)?, "out")
    })
}

/// Checks deterministic contraction of the exact flow at time `time` on
/// `trials` random pairs. A non-positive `time` selects the default.
///
/// # Safety
/// `pot` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hmc_contraction_certificate(
    pot: *const HmcPotential,
    time: f64,
    trials: usize,
    seed: u64,
    tol: f64,
    out: *mut HmcCertificate,
) -> HmcStatus {
    guard(|| {
        let p = handle(pot)?;
        let time = if time > 0.0 {
            time
        } else {
            p.inner.bounds().default_time()
        };
        let r = contraction_certificate(p.inner.as_ref(), time, trials, seed, tol)?;
        write(
            out,
            HmcCertificate {
                trials: r.trials,
                worst_ratio: r.worst_ratio,
                contraction: r.contraction,
                pass: r.pass,
            },
            "out",
        )
    })
}
