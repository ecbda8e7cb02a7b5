//! Running experiments: built-in scenarios and user configs.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crate::analysis::{envelope_growth, equilibrium_distance, invariant_drift, oracle_error, steady_summaries};
use crate::analytic::{autonomous_solution, beta_state, oscillation_amplitude};
use crate::criterion::Criterion;
use crate::dynamics::{beta_gan_initial_state, Coupling, CouplingSign, State, System, SystemMode};
use crate::error::{HarnessError, IntegrationError};
use crate::integrator::{integrate, integrate_system, sgd_simulate, IntegratorConfig, Method, Trajectory};

use super::config::{
    all_outputs, AnalysisSpec, ExperimentConfig, ExplicitInit, InitMarker, InitSpec, ModeSpec, OutputKind,
    ResolvedExperiment,
};
use super::csv_io::export_trajectory;
use super::manifest::{
    Artifact, DivergenceRecord, EquilibriumCheck, InvariantDrift, RunManifest, SgdReport, SCHEMA_VERSION,
};
use super::svg::emit_trajectory_plot;

pub const SCENARIOS: [&str; 4] = ["fig1a", "fig1b", "fig1c", "fig1d"];

/// Late/early excursion ratio above which a run is flagged as growing.
/// Linear drift from rest gives 2, quadratic growth 4.
pub const SECULAR_GROWTH_RATIO: f64 = 3.0;

/// Overrides applied on top of a config before it runs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub horizon: Option<f64>,
    pub step: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub trajectory: Trajectory,
}

/// The built-in configuration for one of [`SCENARIOS`].
pub fn scenario_config(name: &str) -> Result<ExperimentConfig, HarnessError> {
    let annealed = |lambda, time_constant| ModeSpec::Annealed {
        lambda,
        alpha0: 1.0,
        alpha_r: 3.0,
        time_constant,
        coupling_sign: CouplingSign::Descent,
    };
    let rk4 = |t_end| IntegratorConfig::new(Method::Rk4, 1e-3, t_end);
    let target = |t: [f64; 3]| AnalysisSpec {
        transient_cut: None,
        target: Some(t),
    };
    let (mode, init, integrator, analysis) = match name {
        "fig1a" => (
            ModeSpec::Autonomous { alpha_r: 3.0 },
            InitSpec::Explicit(ExplicitInit {
                theta: 1.0,
                psi: 2.0,
                alpha: None,
            }),
            rk4(50.0),
            target([3.0, 0.0, 3.0]),
        ),
        "fig1b" => (
            annealed(1, 3.0),
            InitSpec::Marker(InitMarker::BetaInit),
            rk4(60.0),
            target([2.0, 0.0, 2.0]),
        ),
        "fig1c" => (
            annealed(0, 3.0),
            InitSpec::Marker(InitMarker::BetaInit),
            rk4(60.0),
            target([3.0, 0.0, 3.0]),
        ),
        "fig1d" => (
            annealed(0, 30.0),
            InitSpec::Marker(InitMarker::BetaInit),
            rk4(400.0),
            target([3.0, 0.0, 3.0]),
        ),
        other => return Err(HarnessError::UnknownScenario(other.to_string())),
    };
    Ok(ExperimentConfig {
        name: name.to_string(),
        criterion: Criterion::Linear,
        init,
        outputs: all_outputs(),
        output_dir: PathBuf::from("out"),
        mode,
        integrator,
        sgd: None,
        analysis,
    })
}

pub fn apply_options(config: &ExperimentConfig, opts: &RunOptions) -> ExperimentConfig {
    let mut c = config.clone();
    if let Some(dir) = &opts.out_dir {
        c.output_dir = dir.clone();
    }
    if let Some(h) = opts.horizon {
        c.integrator.t_end = h;
    }
    if let Some(step) = opts.step {
        c.integrator.step = step;
    }
    c
}

pub fn run_scenario(name: &str, opts: &RunOptions) -> Result<RunOutcome, HarnessError> {
    run_experiment(&scenario_config(name)?, opts)
}

pub fn run_config(path: impl AsRef<Path>, opts: &RunOptions) -> Result<RunOutcome, HarnessError> {
    run_experiment(&ExperimentConfig::load(path)?, opts)
}

type Invariant = (&'static str, Box<dyn Fn(&State) -> f64>);

/// Named conserved quantities of the configured flow, when it has any.
fn invariants(exp: &ResolvedExperiment) -> Vec<Invariant> {
    let linear = exp.config.criterion == Criterion::Linear;
    let mut out: Vec<Invariant> = Vec::new();
    match exp.mode {
        SystemMode::Autonomous { alpha_r } if linear => {
            out.push(("radius_squared", Box::new(move |s: &State| (s.theta - alpha_r).powi(2) + s.psi.powi(2))));
        }
        SystemMode::Annealed(m) => {
            let sch = m.schedule;
            if m.coupling == Coupling::Decoupled {
                out.push(("alpha_minus_schedule", Box::new(move |s: &State| s.alpha - sch.value_unchecked(s.t))));
            } else if linear && m.sign == CouplingSign::Descent {
                let shift = sch.alpha_r() - sch.alpha0();
                let tc = sch.time_constant();
                out.push((
                    "shifted_theta_plus_alpha",
                    Box::new(move |s: &State| s.theta + s.alpha - shift * (1.0 - (-s.t / tc).exp())),
                ));
            }
        }
        _ => {}
    }
    out
}

/// Closed-form solution for the configured run, when one applies.
fn oracle(exp: &ResolvedExperiment) -> Option<Box<dyn Fn(f64) -> [f64; 3]>> {
    if exp.config.criterion != Criterion::Linear {
        return None;
    }
    match exp.mode {
        SystemMode::Autonomous { alpha_r } => {
            let (th0, ps0) = (exp.init.theta, exp.init.psi);
            Some(Box::new(move |t| {
                let (th, ps) = autonomous_solution(th0, ps0, alpha_r, t);
                [th, ps, alpha_r]
            }))
        }
        SystemMode::Annealed(m)
            if m.coupling == Coupling::Decoupled && exp.init == beta_gan_initial_state(&m.schedule) =>
        {
            let sch = m.schedule;
            Some(Box::new(move |t| beta_state(&sch, t).expect("trajectory times are non-negative")))
        }
        _ => None,
    }
}

fn sgd_report(exp: &ResolvedExperiment, warnings: &mut Vec<String>) -> Option<(SgdReport, Trajectory)> {
    let cfg = exp.config.sgd?;
    let (traj, diverged_at) = match sgd_simulate(exp.config.criterion, exp.mode, exp.init, &cfg) {
        Ok(t) => (t, None),
        Err(IntegrationError::Diverged { time, partial }) => (*partial, Some(time)),
        Err(e) => {
            warnings.push(format!("sgd: {e}"));
            return None;
        }
    };
    let flow_cfg = IntegratorConfig::new(Method::Rk4, cfg.learning_rate, cfg.learning_rate * cfg.iterations as f64);
    let system = System::new(exp.config.criterion, exp.mode);
    let max_deviation_from_flow = match integrate(&system, exp.init, &flow_cfg) {
        Ok(flow) => Some(
            traj.samples
                .iter()
                .zip(&flow.samples)
                .flat_map(|(a, b)| (0..3).map(move |i| (a.vector()[i] - b.vector()[i]).abs()))
                .fold(0.0, f64::max),
        ),
        Err(_) => None,
    };
    let report = SgdReport {
        learning_rate: cfg.learning_rate,
        iterations: cfg.iterations,
        order: cfg.order,
        final_state: *traj.last().expect("sgd trajectory starts with the initial state"),
        diverged_at,
        max_deviation_from_flow,
    };
    Some((report, traj))
}

/// Runs one experiment and writes the requested artifacts.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome, HarnessError> {
    let clock = Instant::now();
    let started_at_unix_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    let config = apply_options(config, opts);
    let exp = config.resolve()?;
    let mut warnings = Vec::new();
    if let Some(sch) = exp.mode.schedule() {
        if sch.is_fast() {
            warnings.push(format!(
                "T = {} <= 1: annealing is not slower than the training dynamics",
                sch.time_constant()
            ));
        }
    }

    let system = System::new(config.criterion, exp.mode);
    let (trajectory, divergence) = match integrate_system(&system, exp.init, &config.integrator) {
        Ok(t) => (t, None),
        Err(IntegrationError::Diverged { time, partial }) => {
            let record = DivergenceRecord {
                time,
                last_finite_time: partial.last().map_or(0.0, |s| s.t),
                max_magnitude: partial.max_magnitude(),
            };
            log::warn!("{}: integration diverged at t = {time}", config.name);
            (*partial, Some(record))
        }
        Err(e) => return Err(e.into()),
    };

    let growth = envelope_growth(&trajectory);
    let secular_growth = growth > SECULAR_GROWTH_RATIO;
    if secular_growth {
        warnings.push(format!(
            "late-half excursion is {growth:.3}x the early-half excursion: unbounded growth"
        ));
    }

    let (summaries, equilibrium) = match steady_summaries(&trajectory, exp.transient_cut) {
        Ok(s) => {
            let distance = equilibrium_distance(&trajectory, exp.target, exp.transient_cut)?;
            (
                s.to_vec(),
                Some(EquilibriumCheck {
                    target: exp.target,
                    distance,
                }),
            )
        }
        Err(e) => {
            warnings.push(format!("steady-state analysis skipped: {e}"));
            (Vec::new(), None)
        }
    };

    let predicted_amplitude = match exp.mode {
        SystemMode::Annealed(m) if config.criterion == Criterion::Linear && m.coupling == Coupling::Decoupled => {
            Some(oscillation_amplitude(&m.schedule))
        }
        _ => None,
    };
    let oracle_error = oracle(&exp).map(|f| oracle_error(&trajectory, f));
    let invariant_drifts = invariants(&exp)
        .into_iter()
        .map(|(name, f)| InvariantDrift {
            name: name.to_string(),
            drift: invariant_drift(&trajectory, f),
        })
        .collect();
    let sgd = sgd_report(&exp, &mut warnings);

    let mut artifacts = Vec::new();
    let dir = &config.output_dir;
    if !config.outputs.is_empty() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let path_of = |suffix: &str| dir.join(format!("{}{suffix}", config.name));
    let mut record = |kind, path: PathBuf| {
        artifacts.push(Artifact {
            kind,
            path: path.display().to_string(),
        })
    };
    if config.wants(OutputKind::TrajectoryCsv) {
        let path = path_of(".csv");
        export_trajectory(&trajectory, &path)?;
        record(OutputKind::TrajectoryCsv, path);
        if let Some((_, sgd_traj)) = &sgd {
            let path = path_of(".sgd.csv");
            export_trajectory(sgd_traj, &path)?;
            record(OutputKind::TrajectoryCsv, path);
        }
    }
    if config.wants(OutputKind::PlotSvg) {
        let path = path_of(".svg");
        emit_trajectory_plot(&trajectory, exp.mode.alpha_r(), &config.name, &path)?;
        record(OutputKind::PlotSvg, path);
    }
    let manifest_path = path_of(".manifest.json");
    if config.wants(OutputKind::ManifestJson) {
        record(OutputKind::ManifestJson, manifest_path.clone());
    }

    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        started_at_unix_ms,
        duration_seconds: 0.0,
        samples: trajectory.len(),
        final_state: *trajectory.last().expect("trajectory starts with the initial state"),
        divergence,
        envelope_growth: growth.is_finite().then_some(growth),
        secular_growth,
        transient_cut: exp.transient_cut,
        summaries,
        equilibrium,
        predicted_amplitude,
        oracle_error,
        invariant_drifts,
        sgd: sgd.map(|(r, _)| r),
        warnings,
        artifacts,
    };
    let manifest = RunManifest {
        duration_seconds: clock.elapsed().as_secs_f64(),
        ..manifest
    };
    if config.wants(OutputKind::ManifestJson) {
        manifest.write(&manifest_path)?;
    }
    Ok(RunOutcome { manifest, trajectory })
}
