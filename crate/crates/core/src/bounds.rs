//! Closed-form comparison functions used to certify flows and chains.
//!
//! Throughout, `m2`/`big_m2` are the Hessian eigenvalue bounds, `q0`/`p0`
//! the initial position and momentum gaps between two trajectories.

use std::f64::consts::SQRT_2;

/// `sinh²(t) / (1 − 2t²)`, finite for `t < 1/√2`.
pub fn err_fn(t: f64) -> f64 {
    t.sinh().powi(2) / (1.0 - 2.0 * t * t)
}

/// Upper comparison function `Ψ_T(t) = (−½ + (M2/m2) ERR(T√M2)) · ½(√m2 t)² + 1`.
pub fn upper_sandwich(t: f64, time: f64, m2: f64, big_m2: f64) -> f64 {
    let c = -0.5 + big_m2 / m2 * err_fn(time * big_m2.sqrt());
    c * 0.5 * m2 * t * t + 1.0
}

/// Lower comparison function `ψ(t) = 1 − 2 M2 t²`.
pub fn lower_sandwich(t: f64, big_m2: f64) -> f64 {
    1.0 - 2.0 * big_m2 * t * t
}

/// Largest time the contraction argument covers, `√m2 / (2√2 M2)`.
pub fn max_contraction_time(m2: f64, big_m2: f64) -> f64 {
    m2.sqrt() / (2.0 * SQRT_2 * big_m2)
}

/// Endpoint contraction factor `1 − (√m2 T)² / 8`.
pub fn contraction_factor(time: f64, m2: f64) -> f64 {
    1.0 - m2 * time * time / 8.0
}

/// Per-step rate `1 − (m2/M2)² / 64` of the synchronous coupling at the
/// default integration time.
pub fn coupling_rate(m2: f64, big_m2: f64) -> f64 {
    1.0 - (m2 / big_m2).powi(2) / 64.0
}

/// Growth bound on the position gap of two trajectories:
/// `k1 e^{t√M2} + k2 e^{−t√M2}` with `k1,2 = ½(q0 ± p0/√M2)`.
pub fn divergence_bound(t: f64, q0: f64, p0: f64, big_m2: f64) -> f64 {
    let s = big_m2.sqrt();
    let k1 = 0.5 * (q0 + p0 / s);
    let k2 = 0.5 * (q0 - p0 / s);
    k1 * (t * s).exp() + k2 * (-t * s).exp()
}

/// Small-time displacement bound on `‖q_t − q_0‖` with curvature constant `c`:
/// `(1/2c) e^{−√c t} (e^{√c t} − 1) (√c ‖p‖ (e^{√c t} + 1) + c ‖q‖ (e^{√c t} − 1))`.
pub fn displacement_bound(t: f64, q_norm: f64, p_norm: f64, c: f64) -> f64 {
    let s = c.sqrt();
    let e = (s * t).exp();
    (0.5 / c) * (-s * t).exp() * (e - 1.0) * (s * p_norm * (e + 1.0) + c * q_norm * (e - 1.0))
}

/// Euler composition position error bound `6 θ T (M2/√m2) √H`.
pub fn euler_position_bound(theta: f64, time: f64, m2: f64, big_m2: f64, energy: f64) -> f64 {
    6.0 * theta * time * big_m2 / m2.sqrt() * energy.sqrt()
}

/// Euler composition energy error bound `7 (θ/T) H`.
pub fn euler_energy_bound(theta: f64, time: f64, energy: f64) -> f64 {
    7.0 * theta / time * energy
}

/// One-oracle-call Euler position error bound `½ θ² (M2/√m2) √H`.
pub fn euler_oracle_position_bound(theta: f64, m2: f64, big_m2: f64, energy: f64) -> f64 {
    0.5 * theta * theta * big_m2 / m2.sqrt() * energy.sqrt()
}

/// Drift right-hand side in log space: `log(e^{−1} e^r + A)`.
pub fn log_drift_rhs(r: f64, log_a: f64) -> f64 {
    log_add_exp(r - 1.0, log_a)
}

/// `log(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}
