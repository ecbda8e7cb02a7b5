//! State, annealing schedule and the right-hand sides of the training flows.
//!
//! Autonomous flow (data fixed at `α_r`):
//!
//! ```text
//! θ' = −ψ f′(ψθ)
//! ψ' =  θ f′(ψθ) − α_r f′(−ψα_r)
//! ```
//!
//! Annealed flow, where `α` tracks the schedule and optionally receives
//! gradient updates when the switch `λ` is on:
//!
//! ```text
//! θ' = −ψ f′(ψθ)
//! ψ' =  θ f′(ψθ) − α f′(−ψα)
//! α' =  λ σ ψ f′(−ψα) + (α_r − α₀)/T · e^(−t/T)
//! ```
//!
//! `σ = +1` moves `α` along the descent direction of the objective,
//! `σ = −1` reproduces the sign as it is usually printed.

use serde::{Deserialize, Serialize};

use crate::criterion::Criterion;
use crate::error::{finite, DomainError};

/// One time-stamped sample of the three-parameter system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub theta: f64,
    pub psi: f64,
    pub alpha: f64,
}

impl State {
    pub fn new(t: f64, theta: f64, psi: f64, alpha: f64) -> Self {
        State { t, theta, psi, alpha }
    }

    pub fn vector(&self) -> [f64; 3] {
        [self.theta, self.psi, self.alpha]
    }

    pub fn from_vector(t: f64, y: [f64; 3]) -> Self {
        State::new(t, y[0], y[1], y[2])
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.vector().iter().all(|v| v.is_finite())
    }

    fn check_finite(&self) -> Result<(), DomainError> {
        finite("t", self.t)?;
        finite("theta", self.theta)?;
        finite("psi", self.psi)?;
        finite("alpha", self.alpha)?;
        Ok(())
    }
}

/// Exponential path `α(t) = (α₀ − α_r)e^(−t/T) + α_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule", into = "RawSchedule")]
pub struct AnnealingSchedule {
    alpha0: f64,
    alpha_r: f64,
    time_constant: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    alpha0: f64,
    alpha_r: f64,
    #[serde(rename = "T")]
    time_constant: f64,
}

impl TryFrom<RawSchedule> for AnnealingSchedule {
    type Error = DomainError;

    fn try_from(raw: RawSchedule) -> Result<Self, Self::Error> {
        AnnealingSchedule::new(raw.alpha0, raw.alpha_r, raw.time_constant)
    }
}

impl From<AnnealingSchedule> for RawSchedule {
    fn from(s: AnnealingSchedule) -> Self {
        RawSchedule {
            alpha0: s.alpha0,
            alpha_r: s.alpha_r,
            time_constant: s.time_constant,
        }
    }
}

impl AnnealingSchedule {
    /// Only `T > 0` is enforced; `T <= 1` is allowed but see [`Self::is_fast`].
    pub fn new(alpha0: f64, alpha_r: f64, time_constant: f64) -> Result<Self, DomainError> {
        finite("alpha0", alpha0)?;
        finite("alpha_r", alpha_r)?;
        finite("T", time_constant)?;
        if time_constant <= 0.0 {
            return Err(DomainError::NonPositiveTimeConstant(time_constant));
        }
        let s = AnnealingSchedule {
            alpha0,
            alpha_r,
            time_constant,
        };
        if s.is_fast() {
            log::warn!(
                "annealing time constant T = {time_constant} <= 1: the schedule is not slower than the training dynamics"
            );
        }
        Ok(s)
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn alpha_r(&self) -> f64 {
        self.alpha_r
    }

    pub fn time_constant(&self) -> f64 {
        self.time_constant
    }

    /// `T <= 1`: annealing is not slower than the training time scale.
    pub fn is_fast(&self) -> bool {
        self.time_constant <= 1.0
    }

    pub fn value(&self, t: f64) -> Result<f64, DomainError> {
        check_time(t)?;
        Ok(self.value_unchecked(t))
    }

    pub fn rate(&self, t: f64) -> Result<f64, DomainError> {
        check_time(t)?;
        Ok(self.rate_unchecked(t))
    }

    pub(crate) fn value_unchecked(&self, t: f64) -> f64 {
        (self.alpha0 - self.alpha_r) * (-t / self.time_constant).exp() + self.alpha_r
    }

    pub(crate) fn rate_unchecked(&self, t: f64) -> f64 {
        (self.alpha_r - self.alpha0) / self.time_constant * (-t / self.time_constant).exp()
    }
}

fn check_time(t: f64) -> Result<(), DomainError> {
    finite("t", t)?;
    if t < 0.0 {
        Err(DomainError::NegativeTime(t))
    } else {
        Ok(())
    }
}

/// The `λ ∈ {0, 1}` switch coupling `α` to the fast gradient dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Coupling {
    /// `λ = 0`: `α` follows the schedule only.
    Decoupled,
    /// `λ = 1`: `α` also receives gradient updates.
    Coupled,
}

impl Coupling {
    pub fn lambda(self) -> f64 {
        match self {
            Coupling::Decoupled => 0.0,
            Coupling::Coupled => 1.0,
        }
    }
}

impl TryFrom<i64> for Coupling {
    type Error = DomainError;

    fn try_from(v: i64) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(Coupling::Decoupled),
            1 => Ok(Coupling::Coupled),
            other => Err(DomainError::InvalidSwitch(other)),
        }
    }
}

impl From<Coupling> for i64 {
    fn from(c: Coupling) -> i64 {
        match c {
            Coupling::Decoupled => 0,
            Coupling::Coupled => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingSign {
    /// `+ψf′(−ψα)`: gradient descent on the objective in `α`.
    #[default]
    Descent,
    /// `−ψf′(−ψα)`: the printed sign; secular growth for the Linear criterion.
    AsPrinted,
}

impl CouplingSign {
    pub fn sigma(self) -> f64 {
        match self {
            CouplingSign::Descent => 1.0,
            CouplingSign::AsPrinted => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealedMode {
    pub coupling: Coupling,
    pub schedule: AnnealingSchedule,
    pub sign: CouplingSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SystemMode {
    Autonomous { alpha_r: f64 },
    Annealed(AnnealedMode),
}

impl SystemMode {
    /// The real-data location the system should settle around.
    pub fn alpha_r(&self) -> f64 {
        match self {
            SystemMode::Autonomous { alpha_r } => *alpha_r,
            SystemMode::Annealed(m) => m.schedule.alpha_r(),
        }
    }

    pub fn schedule(&self) -> Option<&AnnealingSchedule> {
        match self {
            SystemMode::Autonomous { .. } => None,
            SystemMode::Annealed(m) => Some(&m.schedule),
        }
    }
}

/// `(θ', ψ')` of the autonomous flow with data fixed at `alpha_r`.
pub fn autonomous_field(c: Criterion, alpha_r: f64, s: &State) -> Result<(f64, f64), DomainError> {
    s.check_finite()?;
    finite("alpha_r", alpha_r)?;
    Ok(autonomous_unchecked(c, alpha_r, s.theta, s.psi))
}

fn autonomous_unchecked(c: Criterion, alpha_r: f64, theta: f64, psi: f64) -> (f64, f64) {
    let gen = c.slope_unchecked(psi * theta);
    let real = c.slope_unchecked(-psi * alpha_r);
    (-psi * gen, theta * gen - alpha_r * real)
}

/// `(θ', ψ', α')` of the annealed flow.
pub fn nonautonomous_field(
    c: Criterion,
    mode: &AnnealedMode,
    s: &State,
) -> Result<(f64, f64, f64), DomainError> {
    s.check_finite()?;
    check_time(s.t)?;
    Ok(nonautonomous_unchecked(c, mode, s.t, s.vector()))
}

fn nonautonomous_unchecked(c: Criterion, mode: &AnnealedMode, t: f64, y: [f64; 3]) -> (f64, f64, f64) {
    let [theta, psi, alpha] = y;
    let real = c.slope_unchecked(-psi * alpha);
    let (d_theta, d_psi) = autonomous_unchecked(c, alpha, theta, psi);
    let d_alpha = mode.coupling.lambda() * mode.sign.sigma() * psi * real
        + mode.schedule.rate_unchecked(t);
    (d_theta, d_psi, d_alpha)
}

/// `θ(0) = α(0) = α₀` and `ψ(0) = 0`: generator pre-fitted to the initial data.
pub fn beta_gan_initial_state(sch: &AnnealingSchedule) -> State {
    State::new(0.0, sch.alpha0(), 0.0, sch.alpha0())
}

/// A time-dependent vector field on `(θ, ψ, α)`.
pub trait VectorField {
    fn derivative(&self, t: f64, y: [f64; 3]) -> [f64; 3];
}

impl<F> VectorField for F
where
    F: Fn(f64, [f64; 3]) -> [f64; 3],
{
    fn derivative(&self, t: f64, y: [f64; 3]) -> [f64; 3] {
        self(t, y)
    }
}

/// A criterion paired with a mode: the concrete training flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct System {
    pub criterion: Criterion,
    pub mode: SystemMode,
}

impl System {
    pub fn new(criterion: Criterion, mode: SystemMode) -> Self {
        System { criterion, mode }
    }

    /// Partial derivatives of the objective, `(∂L/∂θ, ∂L/∂ψ, ∂L/∂α)`.
    ///
    /// In autonomous mode the data location is the fixed `α_r`, whatever
    /// `y[2]` holds.
    pub fn loss_gradient(&self, y: [f64; 3]) -> [f64; 3] {
        let c = self.criterion;
        let [theta, psi, alpha] = y;
        let alpha = match self.mode {
            SystemMode::Autonomous { alpha_r } => alpha_r,
            SystemMode::Annealed(_) => alpha,
        };
        let gen = c.slope_unchecked(psi * theta);
        let real = c.slope_unchecked(-psi * alpha);
        [psi * gen, theta * gen - alpha * real, -psi * real]
    }
}

impl VectorField for System {
    fn derivative(&self, t: f64, y: [f64; 3]) -> [f64; 3] {
        match &self.mode {
            SystemMode::Autonomous { alpha_r } => {
                let (a, b) = autonomous_unchecked(self.criterion, *alpha_r, y[0], y[1]);
                [a, b, 0.0]
            }
            SystemMode::Annealed(m) => {
                let (a, b, c) = nonautonomous_unchecked(self.criterion, m, t, y);
                [a, b, c]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sch133() -> AnnealingSchedule {
        AnnealingSchedule::new(1.0, 3.0, 3.0).unwrap()
    }

    fn annealed(coupling: Coupling, sign: CouplingSign) -> AnnealedMode {
        AnnealedMode {
            coupling,
            schedule: sch133(),
            sign,
        }
    }

    #[test]
    fn schedule_value_examples() {
        let s = sch133();
        assert_eq!(s.value(0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(s.value(3.0).unwrap(), 3.0 - 2.0 * (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.value(3.0).unwrap(), 2.264_241_117_657_115, epsilon = 1e-14);
        assert_abs_diff_eq!(s.value(1000.0).unwrap(), 3.0, epsilon = 1e-12);
        assert_eq!(s.value(-1.0), Err(DomainError::NegativeTime(-1.0)));
    }

    #[test]
    fn schedule_is_monotone_towards_target() {
        for s in [sch133(), AnnealingSchedule::new(5.0, -2.0, 0.7).unwrap()] {
            let mut prev_gap = (s.alpha0() - s.alpha_r()).abs();
            for i in 1..2000 {
                let gap = (s.value(i as f64 * 0.05).unwrap() - s.alpha_r()).abs();
                assert!(gap <= prev_gap);
                prev_gap = gap;
            }
        }
    }

    #[test]
    fn schedule_rate_examples() {
        let s = sch133();
        assert_abs_diff_eq!(s.rate(0.0).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(s.rate(1e4).unwrap(), 0.0);
        let flat = AnnealingSchedule::new(2.0, 2.0, 3.0).unwrap();
        for t in [0.0, 1.0, 17.5] {
            assert_eq!(flat.rate(t).unwrap(), 0.0);
        }
        assert!(s.rate(-0.5).is_err());
    }

    #[test]
    fn schedule_rate_is_derivative_of_value() {
        let h = 5e-5;
        for s in [sch133(), AnnealingSchedule::new(-4.0, 7.0, 0.5).unwrap()] {
            // up to 5T, where the rate is still well above round-off
            for i in 1..=500 {
                let t = i as f64 * 0.01 * s.time_constant();
                let fd = (s.value(t + h).unwrap() - s.value(t - h).unwrap()) / (2.0 * h);
                let rate = s.rate(t).unwrap();
                assert!((rate - fd).abs() <= 1e-8 * rate.abs().max(1e-8), "t = {t}");
            }
        }
    }

    #[test]
    fn schedule_rejects_non_positive_time_constant() {
        assert_eq!(
            AnnealingSchedule::new(1.0, 3.0, 0.0),
            Err(DomainError::NonPositiveTimeConstant(0.0))
        );
        assert!(AnnealingSchedule::new(1.0, 3.0, -3.0).is_err());
        let fast = AnnealingSchedule::new(1.0, 3.0, 0.5).unwrap();
        assert!(fast.is_fast());
        assert!(!sch133().is_fast());
    }

    #[test]
    fn lambda_must_be_binary() {
        assert_eq!(Coupling::try_from(0).unwrap(), Coupling::Decoupled);
        assert_eq!(Coupling::try_from(1).unwrap(), Coupling::Coupled);
        assert_eq!(Coupling::try_from(2), Err(DomainError::InvalidSwitch(2)));
    }

    #[test]
    fn autonomous_field_examples() {
        let s = State::new(0.0, 1.0, 2.0, 3.0);
        assert_eq!(autonomous_field(Criterion::Linear, 3.0, &s).unwrap(), (-2.0, -2.0));
        // f′ from mpmath: f′(2) = 0.119202922..., f′(−6) = 0.997527376...
        let (dt, dp) = autonomous_field(Criterion::Logistic, 3.0, &s).unwrap();
        assert_abs_diff_eq!(dt, -0.238_405_844_044_235_1, epsilon = 1e-12);
        assert_abs_diff_eq!(dp, -2.873_379_208_507_978, epsilon = 1e-12);
        assert!(autonomous_field(Criterion::Linear, 3.0, &State::new(0.0, f64::NAN, 0.0, 0.0)).is_err());
    }

    #[test]
    fn autonomous_field_vanishes_at_favorite_equilibrium() {
        for c in [Criterion::Linear, Criterion::Logistic] {
            for alpha_r in [-4.0, 0.0, 3.0, 11.5] {
                let s = State::new(0.0, alpha_r, 0.0, alpha_r);
                assert_eq!(autonomous_field(c, alpha_r, &s).unwrap(), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn nonautonomous_field_examples() {
        let m = annealed(Coupling::Decoupled, CouplingSign::Descent);
        let (a, b, c) =
            nonautonomous_field(Criterion::Linear, &m, &State::new(0.0, 1.0, 0.0, 1.0)).unwrap();
        assert_eq!((a, b), (0.0, 0.0));
        assert_abs_diff_eq!(c, 2.0 / 3.0, epsilon = 1e-15);

        let m = annealed(Coupling::Coupled, CouplingSign::Descent);
        let (a, b, c) =
            nonautonomous_field(Criterion::Linear, &m, &State::new(0.0, 2.0, 0.5, 2.0)).unwrap();
        assert_eq!((a, b), (-0.5, 0.0));
        assert_abs_diff_eq!(c, 0.5 + 2.0 / 3.0, epsilon = 1e-15);

        let m = annealed(Coupling::Coupled, CouplingSign::AsPrinted);
        let (_, _, c) =
            nonautonomous_field(Criterion::Linear, &m, &State::new(0.0, 2.0, 0.5, 2.0)).unwrap();
        assert_abs_diff_eq!(c, -0.5 + 2.0 / 3.0, epsilon = 1e-15);

        assert!(nonautonomous_field(Criterion::Linear, &m, &State::new(-1.0, 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn initial_state_examples() {
        assert_eq!(beta_gan_initial_state(&sch133()), State::new(0.0, 1.0, 0.0, 1.0));
        let s = AnnealingSchedule::new(0.0, 5.0, 10.0).unwrap();
        assert_eq!(beta_gan_initial_state(&s), State::new(0.0, 0.0, 0.0, 0.0));
        let flat = AnnealingSchedule::new(2.0, 2.0, 3.0).unwrap();
        let init = beta_gan_initial_state(&flat);
        assert_eq!(init, State::new(0.0, 2.0, 0.0, 2.0));
        let m = AnnealedMode {
            coupling: Coupling::Decoupled,
            schedule: flat,
            sign: CouplingSign::Descent,
        };
        assert_eq!(
            nonautonomous_field(Criterion::Linear, &m, &init).unwrap(),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn field_is_locally_lipschitz_on_a_box() {
        // deterministic low-discrepancy points in [-5, 5]^3, t in [0, 10]
        let point = |i: usize, shift: f64| -> (f64, [f64; 3]) {
            let g = |k: f64| ((i as f64 + shift) * k).fract() * 10.0 - 5.0;
            (g(0.618_033_988_7).abs(), [g(0.754_877_666), g(0.569_840_290), g(0.438_287_357)])
        };
        for c in [Criterion::Linear, Criterion::Logistic] {
            let sys = System::new(c, SystemMode::Annealed(annealed(Coupling::Coupled, CouplingSign::Descent)));
            let mut lipschitz: f64 = 0.0;
            for i in 0..2000 {
                let (t, x) = point(i, 0.0);
                let dx = [1e-3 * ((i % 7) as f64 - 3.0), 1e-3, -2e-3];
                let y = [x[0] + dx[0], x[1] + dx[1], x[2] + dx[2]];
                let fx = sys.derivative(t, x);
                let fy = sys.derivative(t, y);
                let num = fx.iter().zip(&fy).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let den = dx.iter().map(|d| d * d).sum::<f64>().sqrt();
                lipschitz = lipschitz.max(num / den);
            }
            assert!(lipschitz.is_finite() && lipschitz < 100.0, "{c}: L = {lipschitz}");
        }
    }

    fn finite_triple() -> impl Strategy<Value = (f64, f64, f64)> {
        (-20.0f64..20.0, -20.0f64..20.0, -20.0f64..20.0)
    }

    proptest! {
        #[test]
        fn decoupled_field_reduces_to_autonomous_with_scheduled_data(
            (theta, psi, alpha) in finite_triple(),
            t in 0.0f64..50.0,
            logistic in any::<bool>(),
        ) {
            let c = if logistic { Criterion::Logistic } else { Criterion::Linear };
            let m = annealed(Coupling::Decoupled, CouplingSign::Descent);
            let alpha_t = m.schedule.value(t).unwrap();
            let (a, b, d_alpha) = nonautonomous_field(c, &m, &State::new(t, theta, psi, alpha_t)).unwrap();
            let (x, y) = autonomous_field(c, alpha_t, &State::new(t, theta, psi, alpha)).unwrap();
            prop_assert_eq!((a, b), (x, y));
            // λ = 0: α' ignores θ and ψ
            prop_assert_eq!(d_alpha, m.schedule.rate(t).unwrap());
            let _ = alpha;
        }

        #[test]
        fn descent_coupling_makes_theta_plus_alpha_follow_the_schedule(
            (theta, psi, alpha) in finite_triple(),
            t in 0.0f64..50.0,
        ) {
            let m = annealed(Coupling::Coupled, CouplingSign::Descent);
            let (a, _, c) = nonautonomous_field(Criterion::Linear, &m, &State::new(t, theta, psi, alpha)).unwrap();
            prop_assert!((a + c - m.schedule.rate(t).unwrap()).abs() <= 1e-12 * (1.0 + psi.abs()));
        }
    }
}
