//! Amplitude-versus-T sweeps of the decoupled Linear annealed system.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{default_transient_cut, steady_summary, Component};
use crate::analytic::oscillation_amplitude;
use crate::criterion::Criterion;
use crate::dynamics::{
    beta_gan_initial_state, AnnealedMode, AnnealingSchedule, Coupling, System, SystemMode,
};
use crate::error::{HarnessError, IntegrationError};
use crate::integrator::{integrate_system, IntegratorConfig};

use super::config::ExperimentConfig;

/// Measurement window appended after the transient cut.
pub const SWEEP_WINDOW: f64 = 8.0 * PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub time_constant: f64,
    pub measured: Option<f64>,
    pub predicted: f64,
    /// `|measured − predicted| / predicted`; absent when nothing is predicted.
    pub relative_error: Option<f64>,
    /// Why the row has no measurement (divergence, invalid T, ...).
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepTable {
    pub alpha0: f64,
    pub alpha_r: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn max_relative_error(&self) -> Option<f64> {
        self.rows
            .iter()
            .map(|r| r.relative_error)
            .collect::<Option<Vec<f64>>>()
            .map(|v| v.into_iter().fold(0.0, f64::max))
    }

    /// Every row measured and the measurements strictly decrease row to row.
    pub fn measured_strictly_decreasing(&self) -> bool {
        let measured: Option<Vec<f64>> = self.rows.iter().map(|r| r.measured).collect();
        measured.is_some_and(|m| m.windows(2).all(|w| w[1] < w[0]))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| HarnessError::Csv(e.to_string());
        w.write_record(["T", "measured", "predicted", "relative_error", "flag"])
            .map_err(err)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.time_constant.to_string(),
                opt(r.measured),
                r.predicted.to_string(),
                opt(r.relative_error),
                r.flag.clone().unwrap_or_default(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| HarnessError::Csv(e.to_string()))
    }

    pub fn export_csv(&self, path: impl AsRef<Path>) -> Result<(), HarnessError> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn measure(
    schedule: AnnealingSchedule,
    integrator: &IntegratorConfig,
) -> Result<f64, String> {
    let mode = SystemMode::Annealed(AnnealedMode {
        coupling: Coupling::Decoupled,
        schedule,
        sign: Default::default(),
    });
    let cut = default_transient_cut(&mode);
    let cfg = IntegratorConfig {
        t_end: cut + SWEEP_WINDOW,
        ..*integrator
    };
    let system = System::new(Criterion::Linear, mode);
    let traj = match integrate_system(&system, beta_gan_initial_state(&schedule), &cfg) {
        Ok(t) => t,
        Err(IntegrationError::Diverged { time, .. }) => return Err(format!("diverged at t = {time}")),
        Err(e) => return Err(e.to_string()),
    };
    steady_summary(&traj, Component::Psi, cut)
        .map(|s| s.amplitude)
        .map_err(|e| e.to_string())
}

/// One row per entry of `time_constants`, in the given order. Rows run in
/// parallel; a failing row is flagged and the sweep continues.
pub fn sweep_time_constant(
    base: &ExperimentConfig,
    time_constants: &[f64],
) -> Result<SweepTable, HarnessError> {
    let resolved = base.resolve()?;
    let mode = match (&resolved.mode, base.criterion) {
        (SystemMode::Annealed(m), Criterion::Linear) if m.coupling == Coupling::Decoupled => *m,
        _ => {
            return Err(HarnessError::Validation(
                "sweep needs a linear, annealed, lambda = 0 base config".into(),
            ))
        }
    };
    let (alpha0, alpha_r) = (mode.schedule.alpha0(), mode.schedule.alpha_r());
    let integrator = base.integrator;
    let rows = time_constants
        .par_iter()
        .map(|&t| match AnnealingSchedule::new(alpha0, alpha_r, t) {
            Err(e) => SweepRow {
                time_constant: t,
                measured: None,
                predicted: f64::NAN,
                relative_error: None,
                flag: Some(e.to_string()),
            },
            Ok(schedule) => {
                let predicted = oscillation_amplitude(&schedule);
                let (measured, flag) = match measure(schedule, &integrator) {
                    Ok(m) => (Some(m), None),
                    Err(why) => (None, Some(why)),
                };
                let relative_error = measured
                    .filter(|_| predicted > 0.0)
                    .map(|m| (m - predicted).abs() / predicted);
                SweepRow {
                    time_constant: t,
                    measured,
                    predicted,
                    relative_error,
                    flag,
                }
            }
        })
        .collect();
    Ok(SweepTable { alpha0, alpha_r, rows })
}
