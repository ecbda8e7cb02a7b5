//! Numerical-versus-closed-form and discrete-versus-continuous reports.

use serde::{Deserialize, Serialize};

use crate::analysis::oracle_error;
use crate::analytic::beta_state;
use crate::criterion::Criterion;
use crate::dynamics::{beta_gan_initial_state, AnnealedMode, AnnealingSchedule, Coupling, State, System, SystemMode};
use crate::error::{HarnessError, IntegrationError};
use crate::integrator::{
    convergence_order, integrate, sgd_simulate, IntegratorConfig, Method, OrderEstimate, SgdConfig, UpdateOrder,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub step: f64,
    pub horizon: f64,
    pub rk4_error: f64,
    pub rk4_half_step_error: f64,
    /// `rk4_error / rk4_half_step_error`, about 16 for a fourth-order method.
    pub rk4_halving_ratio: f64,
    pub euler_error: f64,
}

/// Max deviation of RK4 and Euler runs of the decoupled Linear flow from the
/// closed-form solution.
pub fn oracle_check(schedule: AnnealingSchedule, step: f64, horizon: f64) -> Result<OracleCheck, HarnessError> {
    let system = System::new(
        Criterion::Linear,
        SystemMode::Annealed(AnnealedMode {
            coupling: Coupling::Decoupled,
            schedule,
            sign: Default::default(),
        }),
    );
    let init = beta_gan_initial_state(&schedule);
    let exact = |t: f64| beta_state(&schedule, t).expect("non-negative time");
    let error = |method, h| -> Result<f64, HarnessError> {
        let traj = integrate(&system, init, &IntegratorConfig::new(method, h, horizon))?;
        Ok(oracle_error(&traj, exact))
    };
    let rk4_error = error(Method::Rk4, step)?;
    let rk4_half_step_error = error(Method::Rk4, step / 2.0)?;
    Ok(OracleCheck {
        step,
        horizon,
        rk4_error,
        rk4_half_step_error,
        rk4_halving_ratio: rk4_error / rk4_half_step_error,
        euler_error: error(Method::Euler, step)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdDeviation {
    pub learning_rate: f64,
    pub order: UpdateOrder,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdComparison {
    pub horizon: f64,
    pub deviations: Vec<SgdDeviation>,
    /// Ratios of successive simultaneous-update deviations, about 2 when the
    /// discrete updates converge to the flow at first order.
    pub halving_ratios: Vec<f64>,
    pub euler_order: OrderEstimate,
    pub rk4_order: OrderEstimate,
}

fn max_gap(a: &[State], b: &[State]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| (0..3).map(move |i| (x.vector()[i] - y.vector()[i]).abs()))
        .fold(0.0, f64::max)
}

/// Deviation of discrete SGD from an accurate RK4 solution of the flow, for
/// each learning rate, on the Linear autonomous system from `(θ, ψ) = (1, 2)`.
pub fn sgd_compare(learning_rates: &[f64], horizon: f64) -> Result<SgdComparison, HarnessError> {
    if learning_rates.is_empty() {
        return Err(HarnessError::Validation("at least one learning rate is required".into()));
    }
    let mode = SystemMode::Autonomous { alpha_r: 3.0 };
    let system = System::new(Criterion::Linear, mode);
    let init = State::new(0.0, 1.0, 2.0, 3.0);
    let mut deviations = Vec::new();
    for &lr in learning_rates {
        let iterations = (horizon / lr).round() as usize;
        // reference sampled on the SGD grid
        let sub = 10usize;
        let reference = integrate(
            &system,
            init,
            &IntegratorConfig::new(Method::Rk4, lr / sub as f64, lr * iterations as f64).with_stride(sub),
        )?;
        for order in [UpdateOrder::Simultaneous, UpdateOrder::Alternating] {
            let cfg = SgdConfig {
                learning_rate: lr,
                iterations,
                order,
            };
            let traj = sgd_simulate(Criterion::Linear, mode, init, &cfg)?;
            deviations.push(SgdDeviation {
                learning_rate: lr,
                order,
                max_deviation: max_gap(&traj.samples, &reference.samples),
            });
        }
    }
    let simultaneous: Vec<f64> = deviations
        .iter()
        .filter(|d| d.order == UpdateOrder::Simultaneous)
        .map(|d| d.max_deviation)
        .collect();
    let halving_ratios = simultaneous.windows(2).map(|w| w[0] / w[1]).collect();

    let halvings = |h0: f64| -> Vec<f64> { (0..5).map(|k| h0 / f64::from(1 << k)).collect() };
    let order = |method, h0| -> Result<OrderEstimate, HarnessError> {
        convergence_order(&system, init, method, horizon, &halvings(h0)).map_err(|e: IntegrationError| e.into())
    };
    Ok(SgdComparison {
        horizon,
        deviations,
        halving_ratios,
        euler_order: order(Method::Euler, 0.01)?,
        rk4_order: order(Method::Rk4, 0.1)?,
    })
}
