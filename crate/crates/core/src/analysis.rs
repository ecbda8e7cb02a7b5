//! Steady-state summaries of trajectories: centers, amplitudes, periods,
//! invariant drift and deviation from closed-form oracles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{State, SystemMode};
use crate::error::AnalysisError;
use crate::integrator::Trajectory;

/// Shortest post-transient window accepted by [`steady_summary`].
pub const MIN_WINDOW: f64 = 4.0 * PI;

/// Below this peak-to-peak range a signal counts as flat.
const FLAT_RANGE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Theta,
    Psi,
    Alpha,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::Theta, Component::Psi, Component::Alpha];

    pub fn of(self, s: &State) -> f64 {
        match self {
            Component::Theta => s.theta,
            Component::Psi => s.psi,
            Component::Alpha => s.alpha,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::Theta => "theta",
            Component::Psi => "psi",
            Component::Alpha => "alpha",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationSummary {
    pub component: Component,
    pub center: f64,
    pub amplitude: f64,
    /// Mean spacing of successive maxima; `None` for flat or monotone signals.
    pub period: Option<f64>,
    pub transient_cut: f64,
    pub window: f64,
}

/// Transient cut used when none is configured: `max(10·T, 20)` for annealed
/// runs, `0` for autonomous ones.
pub fn default_transient_cut(mode: &SystemMode) -> f64 {
    match mode {
        SystemMode::Autonomous { .. } => 0.0,
        SystemMode::Annealed(m) => (10.0 * m.schedule.time_constant()).max(20.0),
    }
}

#[derive(Debug, Clone, Copy)]
struct Extremum {
    t: f64,
    value: f64,
}

/// Vertex of the parabola through three equally spaced samples around a
/// discrete extremum at index `i`.
fn refine(ts: &[f64], vs: &[f64], i: usize) -> Extremum {
    let (l, c, r) = (vs[i - 1], vs[i], vs[i + 1]);
    let curvature = l - 2.0 * c + r;
    if curvature == 0.0 {
        return Extremum { t: ts[i], value: c };
    }
    let delta = 0.5 * (l - r) / curvature;
    let h = 0.5 * (ts[i + 1] - ts[i - 1]);
    Extremum {
        t: ts[i] + delta * h,
        value: c - 0.25 * (l - r) * delta,
    }
}

fn local_extrema(ts: &[f64], vs: &[f64], threshold: f64, maxima: bool) -> Vec<Extremum> {
    let sign = if maxima { 1.0 } else { -1.0 };
    (1..vs.len().saturating_sub(1))
        .filter(|&i| {
            let (l, c, r) = (sign * vs[i - 1], sign * vs[i], sign * vs[i + 1]);
            c > l && c >= r && c > sign * threshold
        })
        .map(|i| refine(ts, vs, i))
        .collect()
}

/// Center, amplitude and period of one component after `transient_cut`.
///
/// Extremes are parabola-refined local peaks (or raw samples when the peak
/// sits on the window edge); amplitude is half the peak-to-peak range.
pub fn steady_summary(
    traj: &Trajectory,
    component: Component,
    transient_cut: f64,
) -> Result<OscillationSummary, AnalysisError> {
    let last = traj.last().ok_or(AnalysisError::EmptyTrajectory)?;
    let available = last.t - transient_cut;
    if available < MIN_WINDOW * (1.0 - 1e-9) {
        return Err(AnalysisError::InsufficientWindow {
            available,
            required: MIN_WINDOW,
        });
    }
    let (ts, vs): (Vec<f64>, Vec<f64>) = traj
        .samples
        .iter()
        .filter(|s| s.t >= transient_cut)
        .map(|s| (s.t, component.of(s)))
        .unzip();
    let window = ts.last().unwrap() - ts[0];

    let raw_max = vs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw_min = vs.iter().copied().fold(f64::INFINITY, f64::min);
    if raw_max - raw_min < FLAT_RANGE {
        return Ok(OscillationSummary {
            component,
            center: 0.5 * (raw_max + raw_min),
            amplitude: 0.0,
            period: None,
            transient_cut,
            window,
        });
    }

    let mid = 0.5 * (raw_max + raw_min);
    let quarter = 0.25 * (raw_max - raw_min);
    let maxima = local_extrema(&ts, &vs, mid + quarter, true);
    let minima = local_extrema(&ts, &vs, mid - quarter, false);
    let hi = maxima.iter().map(|e| e.value).fold(raw_max, f64::max);
    let lo = minima.iter().map(|e| e.value).fold(raw_min, f64::min);
    let period = match maxima.as_slice() {
        [first, .., last] => Some((last.t - first.t) / (maxima.len() - 1) as f64),
        _ => None,
    };
    Ok(OscillationSummary {
        component,
        center: 0.5 * (hi + lo),
        amplitude: 0.5 * (hi - lo),
        period,
        transient_cut,
        window,
    })
}

/// Summaries of θ, ψ and α in that order.
pub fn steady_summaries(
    traj: &Trajectory,
    transient_cut: f64,
) -> Result<[OscillationSummary; 3], AnalysisError> {
    Ok([
        steady_summary(traj, Component::Theta, transient_cut)?,
        steady_summary(traj, Component::Psi, transient_cut)?,
        steady_summary(traj, Component::Alpha, transient_cut)?,
    ])
}

/// Euclidean distance between the steady centers and `target = (θ, ψ, α)`.
pub fn equilibrium_distance(
    traj: &Trajectory,
    target: [f64; 3],
    transient_cut: f64,
) -> Result<f64, AnalysisError> {
    let summaries = steady_summaries(traj, transient_cut)?;
    Ok(summaries
        .iter()
        .zip(target)
        .map(|(s, x)| (s.center - x).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Largest deviation of `invariant` from its value at the first sample.
pub fn invariant_drift<F>(traj: &Trajectory, invariant: F) -> f64
where
    F: Fn(&State) -> f64,
{
    let Some(first) = traj.first() else {
        return 0.0;
    };
    let reference = invariant(first);
    traj.samples
        .iter()
        .map(|s| (invariant(s) - reference).abs())
        .fold(0.0, f64::max)
}

/// Largest componentwise deviation between the samples and `oracle(t)`.
pub fn oracle_error<F>(traj: &Trajectory, oracle: F) -> f64
where
    F: Fn(f64) -> [f64; 3],
{
    traj.samples
        .iter()
        .flat_map(|s| {
            let expected = oracle(s.t);
            let got = s.vector();
            (0..3).map(move |i| (got[i] - expected[i]).abs())
        })
        .fold(0.0, f64::max)
}

/// Ratio of the late-half to early-half excursion from the initial state,
/// maximized over components. Bounded oscillations stay near or below 1;
/// polynomial growth like `t²` gives about 4.
pub fn envelope_growth(traj: &Trajectory) -> f64 {
    let (Some(first), Some(last)) = (traj.first(), traj.last()) else {
        return 1.0;
    };
    let split = first.t + 0.5 * (last.t - first.t);
    let origin = first.vector();
    Component::ALL
        .iter()
        .map(|&c| {
            let i = c.index();
            let excursion = |late: bool| {
                traj.samples
                    .iter()
                    .filter(|s| (s.t > split) == late)
                    .map(|s| (s.vector()[i] - origin[i]).abs())
                    .fold(0.0, f64::max)
            };
            let (early, late) = (excursion(false), excursion(true));
            if early <= FLAT_RANGE {
                if late <= FLAT_RANGE {
                    1.0
                } else {
                    f64::INFINITY
                }
            } else {
                late / early
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sampled<F: Fn(f64) -> [f64; 3]>(f: F, h: f64, t_end: f64) -> Trajectory {
        let n = (t_end / h).round() as usize;
        Trajectory::new(
            (0..=n)
                .map(|k| {
                    let t = k as f64 * h;
                    State::from_vector(t, f(t))
                })
                .collect(),
        )
    }

    #[test]
    fn recovers_exact_sinusoid() {
        for (c, a, phi) in [(3.0, 1.7, 0.3), (-0.5, 0.05, 2.9), (0.0, 2.0, -1.2)] {
            let tr = sampled(|t| [c + a * (t + phi).sin(), 0.0, 0.0], 1e-3, 60.0);
            let s = steady_summary(&tr, Component::Theta, 10.0).unwrap();
            assert_abs_diff_eq!(s.center, c, epsilon = 1e-9);
            assert_abs_diff_eq!(s.amplitude, a, epsilon = 1e-6);
            assert_abs_diff_eq!(s.period.unwrap(), 2.0 * PI, epsilon = 1e-4);
            assert_abs_diff_eq!(s.window, 50.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn refinement_removes_grid_bias_on_coarse_grids() {
        let tr = sampled(|t| [(1.3 * t + 0.4).sin(), 0.0, 0.0], 0.05, 80.0);
        let s = steady_summary(&tr, Component::Theta, 0.0).unwrap();
        assert_abs_diff_eq!(s.amplitude, 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(s.period.unwrap(), 2.0 * PI / 1.3, epsilon = 1e-4);
    }

    #[test]
    fn harmonic_orbit_summary() {
        let tr = sampled(
            |t| [3.0 - 2.0 * t.cos() - 2.0 * t.sin(), 2.0 * t.cos() - 2.0 * t.sin(), 3.0],
            1e-3,
            50.0,
        );
        let s = steady_summary(&tr, Component::Psi, 0.0).unwrap();
        assert_abs_diff_eq!(s.center, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.amplitude, 8f64.sqrt(), epsilon = 1e-6);
        assert_abs_diff_eq!(s.period.unwrap(), 2.0 * PI, epsilon = 1e-4);
        let d = equilibrium_distance(&tr, [3.0, 0.0, 3.0], 0.0).unwrap();
        assert!(d < 1e-8);
    }

    #[test]
    fn constant_signal_is_flat() {
        let tr = sampled(|_| [3.0, 0.0, 3.0], 0.01, 20.0);
        for c in Component::ALL {
            let s = steady_summary(&tr, c, 0.0).unwrap();
            assert_eq!(s.amplitude, 0.0);
            assert_eq!(s.period, None);
        }
        assert_eq!(steady_summary(&tr, Component::Theta, 0.0).unwrap().center, 3.0);
        assert_eq!(equilibrium_distance(&tr, [3.0, 0.0, 3.0], 0.0).unwrap(), 0.0);
        assert_eq!(invariant_drift(&tr, |s| s.theta * s.alpha + s.psi), 0.0);
    }

    #[test]
    fn short_window_is_rejected() {
        let tr = sampled(|t| [t.sin(), 0.0, 0.0], 0.01, 20.0);
        assert!(matches!(
            steady_summary(&tr, Component::Theta, 10.0),
            Err(AnalysisError::InsufficientWindow { .. })
        ));
        assert!(steady_summary(&tr, Component::Theta, 20.0 - MIN_WINDOW).is_ok());
        assert_eq!(
            steady_summary(&Trajectory::default(), Component::Theta, 0.0),
            Err(AnalysisError::EmptyTrajectory)
        );
    }

    #[test]
    fn monotone_signal_has_no_period() {
        let tr = sampled(|t| [3.0 - 2.0 * (-t / 30.0).exp(), 0.0, 0.0], 0.01, 40.0);
        let s = steady_summary(&tr, Component::Theta, 0.0).unwrap();
        assert_eq!(s.period, None);
        assert!(s.amplitude > 0.0);
    }

    #[test]
    fn oracle_error_against_itself_is_zero() {
        let f = |t: f64| [t.cos(), t.sin(), 1.0 - t];
        let tr = sampled(f, 0.01, 5.0);
        assert_eq!(oracle_error(&tr, f), 0.0);
        let shifted = |t: f64| [t.cos() + 1e-3, t.sin(), 1.0 - t];
        assert_abs_diff_eq!(oracle_error(&tr, shifted), 1e-3, epsilon = 1e-12);
    }

    #[test]
    fn envelope_growth_separates_bounded_from_secular() {
        let bounded = sampled(|t| [t.sin(), t.cos(), 3.0], 0.01, 60.0);
        assert!(envelope_growth(&bounded) < 1.05);
        let secular = sampled(|t| [t * t, -2.0 * t, 1.0], 0.01, 60.0);
        assert!(envelope_growth(&secular) > 3.5);
        let constant = sampled(|_| [1.0, 2.0, 3.0], 0.01, 5.0);
        assert_eq!(envelope_growth(&constant), 1.0);
    }

    #[test]
    fn default_cut_policy() {
        use crate::dynamics::{AnnealedMode, AnnealingSchedule, Coupling, CouplingSign};
        assert_eq!(default_transient_cut(&SystemMode::Autonomous { alpha_r: 3.0 }), 0.0);
        let annealed = |t| {
            SystemMode::Annealed(AnnealedMode {
                coupling: Coupling::Decoupled,
                schedule: AnnealingSchedule::new(1.0, 3.0, t).unwrap(),
                sign: CouplingSign::Descent,
            })
        };
        assert_eq!(default_transient_cut(&annealed(3.0)), 30.0);
        assert_eq!(default_transient_cut(&annealed(1.5)), 20.0);
        assert_eq!(default_transient_cut(&annealed(30.0)), 300.0);
    }
}
