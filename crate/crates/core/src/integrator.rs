//! Fixed-step integration of the flows and the discrete SGD updates they
//! approximate.

use serde::{Deserialize, Serialize};

use crate::criterion::Criterion;
use crate::dynamics::{State, System, SystemMode, VectorField};
use crate::error::IntegrationError;

/// Any component beyond this magnitude counts as divergence.
pub const DIVERGENCE_GUARD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: Method,
    pub step: f64,
    pub t_end: f64,
    #[serde(default = "one")]
    pub sample_stride: usize,
}

fn one() -> usize {
    1
}

impl IntegratorConfig {
    pub fn new(method: Method, step: f64, t_end: f64) -> Self {
        IntegratorConfig {
            method,
            step,
            t_end,
            sample_stride: 1,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.sample_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<(), IntegrationError> {
        let bad = |m: String| Err(IntegrationError::Config(m));
        if !(self.step.is_finite() && self.step > 0.0) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.step > self.t_end {
            return bad(format!("step {} exceeds t_end {}", self.step, self.t_end));
        }
        if self.sample_stride == 0 {
            return bad("sample_stride must be at least 1".into());
        }
        Ok(())
    }

    /// `⌈t_end / h⌉`, ignoring round-off just above an integer.
    pub fn num_steps(&self) -> usize {
        let ratio = self.t_end / self.step;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as usize
        } else {
            ratio.ceil() as usize
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateOrder {
    /// θ, then ψ using the new θ, then α using the new ψ.
    #[default]
    Alternating,
    Simultaneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    #[serde(default)]
    pub order: UpdateOrder,
}

impl SgdConfig {
    pub fn validate(&self) -> Result<(), IntegrationError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(IntegrationError::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.iterations == 0 {
            return Err(IntegrationError::Config("iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stepping {
    Continuous(IntegratorConfig),
    Sgd(SgdConfig),
}

/// What produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub criterion: Criterion,
    pub mode: SystemMode,
    pub stepping: Stepping,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<State>,
    pub meta: Option<TrajectoryMeta>,
}

impl Trajectory {
    pub fn new(samples: Vec<State>) -> Self {
        Trajectory { samples, meta: None }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&State> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&State> {
        self.samples.last()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    /// Largest absolute value of any state component.
    pub fn max_magnitude(&self) -> f64 {
        self.samples
            .iter()
            .flat_map(|s| s.vector())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn axpy(y: [f64; 3], a: f64, k: [f64; 3]) -> [f64; 3] {
    [y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2]]
}

fn step<F: VectorField + ?Sized>(field: &F, method: Method, t: f64, y: [f64; 3], h: f64) -> [f64; 3] {
    match method {
        Method::Euler => axpy(y, h, field.derivative(t, y)),
        Method::Rk4 => {
            let k1 = field.derivative(t, y);
            let k2 = field.derivative(t + 0.5 * h, axpy(y, 0.5 * h, k1));
            let k3 = field.derivative(t + 0.5 * h, axpy(y, 0.5 * h, k2));
            let k4 = field.derivative(t + h, axpy(y, h, k3));
            let mut out = y;
            for i in 0..3 {
                out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            out
        }
    }
}

fn diverged(y: &[f64; 3]) -> bool {
    y.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_GUARD)
}

fn check_init(init: &State) -> Result<(), IntegrationError> {
    if !init.is_finite() {
        return Err(IntegrationError::Config(format!("initial state is not finite: {init:?}")));
    }
    Ok(())
}

/// Integrates `field` from `init` over `[init.t, init.t + t_end]`.
///
/// Sample times are `init.t + k·h` (no accumulated round-off); every
/// `sample_stride`-th step is kept, starting with the initial state.
pub fn integrate<F: VectorField + ?Sized>(
    field: &F,
    init: State,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegrationError> {
    cfg.validate()?;
    check_init(&init)?;
    let n = cfg.num_steps();
    let h = cfg.step;
    let t0 = init.t;
    let mut samples = Vec::with_capacity(n / cfg.sample_stride + 1);
    samples.push(init);
    let mut y = init.vector();
    for k in 0..n {
        let t = t0 + k as f64 * h;
        let next = step(field, cfg.method, t, y, h);
        let t_next = t0 + (k + 1) as f64 * h;
        if diverged(&next) {
            let last = State::from_vector(t, y);
            if samples.last().map(|s| s.t) != Some(t) {
                samples.push(last);
            }
            return Err(IntegrationError::Diverged {
                time: t_next,
                partial: Box::new(Trajectory::new(samples)),
            });
        }
        y = next;
        if (k + 1) % cfg.sample_stride == 0 {
            samples.push(State::from_vector(t_next, y));
        }
    }
    Ok(Trajectory::new(samples))
}

/// [`integrate`] for a concrete training flow, recording provenance.
pub fn integrate_system(
    system: &System,
    init: State,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegrationError> {
    let meta = TrajectoryMeta {
        criterion: system.criterion,
        mode: system.mode,
        stepping: Stepping::Continuous(*cfg),
    };
    match integrate(system, init, cfg) {
        Ok(mut tr) => {
            tr.meta = Some(meta);
            Ok(tr)
        }
        Err(IntegrationError::Diverged { time, mut partial }) => {
            partial.meta = Some(meta);
            Err(IntegrationError::Diverged { time, partial })
        }
        Err(e) => Err(e),
    }
}

/// Discrete gradient descent on θ and ascent on ψ with learning rate ε.
///
/// In annealed mode α additionally takes `ε·λσψf′(−ψα)` plus the annealing
/// increment `ε·rate(kε)`. Sample `k` sits at `t = kε`.
pub fn sgd_simulate(
    criterion: Criterion,
    mode: SystemMode,
    init: State,
    cfg: &SgdConfig,
) -> Result<Trajectory, IntegrationError> {
    cfg.validate()?;
    check_init(&init)?;
    let system = System::new(criterion, mode);
    let eps = cfg.learning_rate;
    let (coupled_gain, schedule) = match &mode {
        SystemMode::Autonomous { .. } => (0.0, None),
        SystemMode::Annealed(m) => (m.coupling.lambda() * m.sign.sigma(), Some(m.schedule)),
    };
    let meta = TrajectoryMeta {
        criterion,
        mode,
        stepping: Stepping::Sgd(*cfg),
    };

    let mut samples = Vec::with_capacity(cfg.iterations + 1);
    samples.push(init);
    let mut y = init.vector();
    for k in 0..cfg.iterations {
        let t = init.t + k as f64 * eps;
        let g = system.loss_gradient(y);
        let mut next = y;
        next[0] = y[0] - eps * g[0];
        let g = match cfg.order {
            UpdateOrder::Alternating => system.loss_gradient(next),
            UpdateOrder::Simultaneous => g,
        };
        next[1] = y[1] + eps * g[1];
        if let Some(sch) = &schedule {
            let g = match cfg.order {
                UpdateOrder::Alternating => system.loss_gradient(next),
                UpdateOrder::Simultaneous => g,
            };
            // −∂L/∂α = ψf′(−ψα)
            next[2] = y[2] - eps * coupled_gain * g[2] + eps * sch.rate_unchecked(t);
        }
        let t_next = init.t + (k + 1) as f64 * eps;
        if diverged(&next) {
            return Err(IntegrationError::Diverged {
                time: t_next,
                partial: Box::new(Trajectory {
                    samples,
                    meta: Some(meta),
                }),
            });
        }
        y = next;
        samples.push(State::from_vector(t_next, y));
    }
    Ok(Trajectory {
        samples,
        meta: Some(meta),
    })
}

/// The reference run uses the finest listed step divided by this factor, so
/// its own error is negligible next to every measured run.
pub const REFERENCE_REFINEMENT: usize = 16;

/// Result of an empirical order-of-accuracy study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    /// Least-squares slope of `log(error)` against `log(h)`; `None` when exact.
    pub order: Option<f64>,
    /// Every surviving run reproduced the reference exactly.
    pub exact: bool,
    /// `(h, max error against the reference)` for each surviving step.
    pub errors: Vec<(f64, f64)>,
    pub reference_step: f64,
}

/// Estimates the convergence order of `method` by running it at each step in
/// `steps` (each half the previous) and comparing against a reference run of
/// the same method at [`REFERENCE_REFINEMENT`] times the finest step.
pub fn convergence_order<F: VectorField + ?Sized>(
    field: &F,
    init: State,
    method: Method,
    t_end: f64,
    steps: &[f64],
) -> Result<OrderEstimate, IntegrationError> {
    if steps.len() < 3 {
        return Err(IntegrationError::InsufficientData(steps.len()));
    }
    for w in steps.windows(2) {
        let ratio = w[0] / w[1];
        if (ratio - 2.0).abs() > 1e-9 {
            return Err(IntegrationError::Config(format!(
                "steps must halve successively, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    let coarsest = steps[0];
    let finest_stride = 1usize << (steps.len() - 1);
    let reference_step = steps[steps.len() - 1] / REFERENCE_REFINEMENT as f64;
    let ref_cfg = IntegratorConfig::new(method, reference_step, t_end).with_stride(finest_stride * REFERENCE_REFINEMENT);
    let reference = match integrate(field, init, &ref_cfg) {
        Ok(tr) => tr,
        Err(IntegrationError::Diverged { .. }) => return Err(IntegrationError::InsufficientData(0)),
        Err(e) => return Err(e),
    };
    let mut errors = Vec::new();
    for (i, &h) in steps.iter().enumerate() {
        let cfg = IntegratorConfig::new(method, h, t_end).with_stride(1 << i);
        let run = match integrate(field, init, &cfg) {
            Ok(tr) => tr,
            Err(IntegrationError::Diverged { .. }) => continue,
            Err(e) => return Err(e),
        };
        let err = run
            .samples
            .iter()
            .zip(&reference.samples)
            .flat_map(|(a, b)| {
                debug_assert!((a.t - b.t).abs() <= 1e-9 * coarsest.max(a.t));
                (0..3).map(move |i| (a.vector()[i] - b.vector()[i]).abs())
            })
            .fold(0.0, f64::max);
        errors.push((h, err));
    }
    if errors.len() < 3 {
        return Err(IntegrationError::InsufficientData(errors.len()));
    }

    if errors.iter().all(|&(_, e)| e == 0.0) {
        return Ok(OrderEstimate {
            order: None,
            exact: true,
            errors,
            reference_step,
        });
    }
    let points: Vec<(f64, f64)> = errors
        .iter()
        .filter(|&&(_, e)| e > 0.0)
        .map(|&(h, e)| (h.ln(), e.ln()))
        .collect();
    if points.len() < 2 {
        return Err(IntegrationError::InsufficientData(points.len()));
    }
    Ok(OrderEstimate {
        order: Some(least_squares_slope(&points)),
        exact: false,
        errors,
        reference_step,
    })
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
