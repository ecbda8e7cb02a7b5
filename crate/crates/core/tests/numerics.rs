use approx::assert_relative_eq;

use tinygan::analytic::beta_state;
use tinygan::dynamics::beta_gan_initial_state;
use tinygan::harness::reports::{oracle_check, sgd_compare};
use tinygan::integrator::{convergence_order, integrate, sgd_simulate};
use tinygan::{
    AnnealedMode, AnnealingSchedule, Coupling, CouplingSign, Criterion, IntegratorConfig, Method, SgdConfig, State,
    System, SystemMode, UpdateOrder,
};

const AUTONOMOUS: SystemMode = SystemMode::Autonomous { alpha_r: 3.0 };

fn fig1a_init() -> State {
    State::new(0.0, 1.0, 2.0, 3.0)
}

fn halvings(h0: f64, n: u32) -> Vec<f64> {
    (0..n).map(|k| h0 / f64::from(1u32 << k)).collect()
}

#[test]
fn euler_is_first_order() {
    let sys = System::new(Criterion::Linear, AUTONOMOUS);
    let est = convergence_order(&sys, fig1a_init(), Method::Euler, 10.0, &halvings(0.01, 4)).unwrap();
    let p = est.order.unwrap();
    assert!((0.8..=1.2).contains(&p), "{p}");
    assert_eq!(est.errors.len(), 4);
}

#[test]
fn rk4_is_fourth_order() {
    let sys = System::new(Criterion::Linear, AUTONOMOUS);
    let est = convergence_order(&sys, fig1a_init(), Method::Rk4, 10.0, &halvings(0.1, 4)).unwrap();
    let p = est.order.unwrap();
    assert!((3.5..=4.5).contains(&p), "{p}");
}

#[test]
fn rk4_order_holds_for_logistic_and_annealed_fields() {
    let sch = AnnealingSchedule::new(1.0, 3.0, 3.0).unwrap();
    let coupled = SystemMode::Annealed(AnnealedMode {
        coupling: Coupling::Coupled,
        schedule: sch,
        sign: CouplingSign::Descent,
    });
    for (c, mode, init) in [
        (Criterion::Logistic, AUTONOMOUS, fig1a_init()),
        (Criterion::Linear, coupled, beta_gan_initial_state(&sch)),
        (Criterion::Logistic, coupled, beta_gan_initial_state(&sch)),
    ] {
        let est = convergence_order(&System::new(c, mode), init, Method::Rk4, 10.0, &halvings(0.1, 4)).unwrap();
        let p = est.order.unwrap();
        assert!((3.5..=4.5).contains(&p), "{c:?} {mode:?}: {p}");
    }
}

#[test]
fn halving_rk4_step_cuts_oracle_error_sixteenfold() {
    let sch = AnnealingSchedule::new(1.0, 3.0, 3.0).unwrap();
    let check = oracle_check(sch, 0.1, 60.0).unwrap();
    assert!((8.0..=32.0).contains(&check.rk4_halving_ratio), "{}", check.rk4_halving_ratio);
    assert!(check.euler_error > check.rk4_error);
}

#[test]
fn rk4_matches_closed_form_for_other_schedules() {
    for (a0, ar, t) in [(0.0, 1.0, 2.0), (5.0, -1.0, 10.0), (1.0, 3.0, 1.5)] {
        let sch = AnnealingSchedule::new(a0, ar, t).unwrap();
        let check = oracle_check(sch, 1e-2, 40.0).unwrap();
        assert!(check.rk4_error < 1e-6, "{a0} {ar} {t}: {}", check.rk4_error);
    }
}

#[test]
fn closed_form_starts_at_beta_init() {
    let sch = AnnealingSchedule::new(1.0, 3.0, 3.0).unwrap();
    let s = beta_gan_initial_state(&sch);
    for (a, b) in beta_state(&sch, 0.0).unwrap().iter().zip(s.vector()) {
        assert!((a - b).abs() < 1e-14, "{a} vs {b}");
    }
}

#[test]
fn sgd_approaches_flow_linearly_in_learning_rate() {
    let cmp = sgd_compare(&[0.02, 0.01, 0.005], 10.0).unwrap();
    assert_eq!(cmp.deviations.len(), 6);
    for q in &cmp.halving_ratios {
        assert!((1.6..=2.4).contains(q), "{q}");
    }
}

fn one_step(order: UpdateOrder, lr: f64) -> State {
    let cfg = SgdConfig {
        learning_rate: lr,
        iterations: 1,
        order,
    };
    *sgd_simulate(Criterion::Linear, AUTONOMOUS, fig1a_init(), &cfg)
        .unwrap()
        .last()
        .unwrap()
}

#[test]
fn update_order_gap_is_second_order_per_step() {
    // ψ sees the updated θ: the gap after one step is ε²·ψ₀ for the linear criterion
    for lr in [0.1, 0.05, 0.025] {
        let alt = one_step(UpdateOrder::Alternating, lr);
        let sim = one_step(UpdateOrder::Simultaneous, lr);
        assert_eq!(alt.theta, sim.theta);
        assert_relative_eq!(sim.psi - alt.psi, lr * lr * 2.0, max_relative = 1e-10);
    }
}

#[test]
fn update_order_gap_over_fixed_horizon_is_first_order() {
    let gap = |lr: f64| {
        let run = |order| {
            let cfg = SgdConfig {
                learning_rate: lr,
                iterations: (10.0 / lr).round() as usize,
                order,
            };
            sgd_simulate(Criterion::Linear, AUTONOMOUS, fig1a_init(), &cfg).unwrap()
        };
        let (a, s) = (run(UpdateOrder::Alternating), run(UpdateOrder::Simultaneous));
        a.samples
            .iter()
            .zip(&s.samples)
            .map(|(x, y)| (x.psi - y.psi).abs().max((x.theta - y.theta).abs()))
            .fold(0.0, f64::max)
    };
    let ratio = gap(0.02) / gap(0.01);
    assert!((1.6..=2.4).contains(&ratio), "{ratio}");
}

#[test]
fn simultaneous_sgd_spirals_out_alternating_stays_bounded() {
    let radius = |s: &State| ((s.theta - 3.0).powi(2) + s.psi.powi(2)).sqrt();
    let run = |order| {
        let cfg = SgdConfig {
            learning_rate: 0.05,
            iterations: 4000,
            order,
        };
        sgd_simulate(Criterion::Linear, AUTONOMOUS, fig1a_init(), &cfg).unwrap()
    };
    let sim = run(UpdateOrder::Simultaneous);
    let alt = run(UpdateOrder::Alternating);
    // simultaneous steps scale the radius by sqrt(1 + ε²)
    assert_relative_eq!(radius(sim.last().unwrap()), 8f64.sqrt() * (1.0 + 0.05f64 * 0.05).powf(2000.0), max_relative = 1e-9);
    assert!(alt.samples.iter().all(|s| radius(s) < 3.5));
}

#[test]
fn annealed_sgd_tracks_annealed_flow() {
    let sch = AnnealingSchedule::new(1.0, 3.0, 3.0).unwrap();
    let mode = SystemMode::Annealed(AnnealedMode {
        coupling: Coupling::Decoupled,
        schedule: sch,
        sign: CouplingSign::Descent,
    });
    let init = beta_gan_initial_state(&sch);
    let dev = |lr: f64| {
        let n = (10.0 / lr).round() as usize;
        let cfg = SgdConfig {
            learning_rate: lr,
            iterations: n,
            order: UpdateOrder::Alternating,
        };
        let sgd = sgd_simulate(Criterion::Linear, mode, init, &cfg).unwrap();
        let flow = integrate(
            &System::new(Criterion::Linear, mode),
            init,
            &IntegratorConfig::new(Method::Rk4, lr / 10.0, 10.0).with_stride(10),
        )
        .unwrap();
        sgd.samples
            .iter()
            .zip(&flow.samples)
            .flat_map(|(a, b)| (0..3).map(move |i| (a.vector()[i] - b.vector()[i]).abs()))
            .fold(0.0, f64::max)
    };
    let ratio = dev(0.02) / dev(0.01);
    assert!((1.6..=2.4).contains(&ratio), "{ratio}");
}
