//! Closed-form solutions of the Linear-criterion flows.
//!
//! With `f(y) = y` and `λ = 0` the annealed flow is linear:
//! `θ' = −ψ`, `ψ' = θ − α(t)`, `α' = K e^(−at)` with `a = 1/T` and
//! `K = (α_r − α₀)/T`. Starting from `θ(0) = α(0) = α₀`, `ψ(0) = 0` the
//! Laplace transform of `ψ` is `−K / ((1 + s²)(s + a))`, whose partial
//! fractions give
//!
//! ```text
//! ψ(t) = A cos t + B sin t + C e^(−at)
//! A = K/(1+a²),  B = −Ka/(1+a²),  C = −K/(1+a²)
//! ```
//!
//! These are the residues of the transform. The triple is sometimes quoted
//! with all three signs flipped; that version violates `ψ''(0) = −K`.
//! The amplitude `√(A² + B²)` is the same either way.

use serde::{Deserialize, Serialize};

use crate::dynamics::AnnealingSchedule;
use crate::error::{finite, DomainError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceCoefficients {
    /// Coefficient of `cos t`.
    pub a_cos: f64,
    /// Coefficient of `sin t`.
    pub b_sin: f64,
    /// Coefficient of `e^(−at)`.
    pub c_exp: f64,
    /// Decay rate `1/T`.
    pub decay: f64,
    /// Forcing strength `(α_r − α₀)/T`.
    pub forcing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationPrediction {
    pub amplitude: f64,
    pub phase: f64,
    pub theta_center: f64,
    pub psi_center: f64,
}

/// Solution of `θ' = −ψ`, `ψ' = θ − α_r` (Linear, autonomous).
pub fn autonomous_solution(theta0: f64, psi0: f64, alpha_r: f64, t: f64) -> (f64, f64) {
    let (sin, cos) = t.sin_cos();
    let offset = theta0 - alpha_r;
    (
        alpha_r + offset * cos - psi0 * sin,
        psi0 * cos + offset * sin,
    )
}

/// Radius of the autonomous orbit in the `(θ, ψ)` plane.
pub fn autonomous_radius(theta0: f64, psi0: f64, alpha_r: f64) -> f64 {
    (theta0 - alpha_r).hypot(psi0)
}

pub fn laplace_coefficients(sch: &AnnealingSchedule) -> LaplaceCoefficients {
    let a = 1.0 / sch.time_constant();
    let k = (sch.alpha_r() - sch.alpha0()) / sch.time_constant();
    let denom = 1.0 + a * a;
    LaplaceCoefficients {
        a_cos: k / denom,
        b_sin: -k * a / denom,
        c_exp: -k / denom,
        decay: a,
        forcing: k,
    }
}

fn check_time(t: f64) -> Result<(), DomainError> {
    finite("t", t)?;
    if t < 0.0 {
        return Err(DomainError::NegativeTime(t));
    }
    Ok(())
}

/// `ψ(t)` of the decoupled Linear annealed flow from the β-GAN initial state.
pub fn beta_psi_solution(sch: &AnnealingSchedule, t: f64) -> Result<f64, DomainError> {
    check_time(t)?;
    let c = laplace_coefficients(sch);
    let (sin, cos) = t.sin_cos();
    Ok(c.a_cos * cos + c.b_sin * sin + c.c_exp * (-c.decay * t).exp())
}

/// `θ(t) = θ(0) − ∫₀ᵗ ψ`, using the exact antiderivative.
///
/// The constant collapses to `α_r` because `α₀ − B − C/a = α₀ + K/a`.
pub fn beta_theta_solution(sch: &AnnealingSchedule, t: f64) -> Result<f64, DomainError> {
    check_time(t)?;
    let c = laplace_coefficients(sch);
    let (sin, cos) = t.sin_cos();
    Ok(sch.alpha_r() + c.c_exp / c.decay * (-c.decay * t).exp() - c.a_cos * sin + c.b_sin * cos)
}

/// Full closed-form state `(θ, ψ, α)` at `t`.
pub fn beta_state(sch: &AnnealingSchedule, t: f64) -> Result<[f64; 3], DomainError> {
    Ok([
        beta_theta_solution(sch, t)?,
        beta_psi_solution(sch, t)?,
        sch.value(t)?,
    ])
}

/// Steady-state amplitude `|K| / √(1 + a²)` of the ψ oscillation.
pub fn oscillation_amplitude(sch: &AnnealingSchedule) -> f64 {
    let c = laplace_coefficients(sch);
    c.forcing.abs() / (1.0 + c.decay * c.decay).sqrt()
}

/// `φ` such that `A cos t + B sin t = 𝒜 sin(t + φ)`, in `(−π, π]`.
pub fn oscillation_phase(sch: &AnnealingSchedule) -> Result<f64, DomainError> {
    let c = laplace_coefficients(sch);
    if c.forcing == 0.0 {
        return Err(DomainError::UndefinedPhase);
    }
    Ok(c.a_cos.atan2(c.b_sin))
}

pub fn oscillation_prediction(sch: &AnnealingSchedule) -> Result<OscillationPrediction, DomainError> {
    Ok(OscillationPrediction {
        amplitude: oscillation_amplitude(sch),
        phase: oscillation_phase(sch)?,
        theta_center: sch.alpha_r(),
        psi_center: 0.0,
    })
}
