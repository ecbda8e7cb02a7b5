//! Run manifest: everything measured about one experiment, as JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::OscillationSummary;
use crate::dynamics::State;
use crate::error::HarnessError;
use crate::integrator::UpdateOrder;

use super::config::{ExperimentConfig, OutputKind};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRecord {
    pub time: f64,
    pub last_finite_time: f64,
    pub max_magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCheck {
    pub target: [f64; 3],
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantDrift {
    pub name: String,
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdReport {
    pub learning_rate: f64,
    pub iterations: usize,
    pub order: UpdateOrder,
    pub final_state: State,
    pub diverged_at: Option<f64>,
    /// Max deviation from an RK4 solution of the flow on the same time grid.
    pub max_deviation_from_flow: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub kind: OutputKind,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub started_at_unix_ms: u64,
    pub duration_seconds: f64,
    pub samples: usize,
    pub final_state: State,
    pub divergence: Option<DivergenceRecord>,
    /// Late-half over early-half excursion; absent when unbounded.
    pub envelope_growth: Option<f64>,
    pub secular_growth: bool,
    pub transient_cut: f64,
    pub summaries: Vec<OscillationSummary>,
    pub equilibrium: Option<EquilibriumCheck>,
    pub predicted_amplitude: Option<f64>,
    pub oracle_error: Option<f64>,
    pub invariant_drifts: Vec<InvariantDrift>,
    pub sgd: Option<SgdReport>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<Artifact>,
}

impl RunManifest {
    /// The run hit the divergence guard or grew without bound.
    pub fn divergence_flagged(&self) -> bool {
        self.divergence.is_some() || self.secular_growth
    }

    /// Copy with wall-clock fields zeroed, for comparing runs.
    pub fn without_timing(&self) -> Self {
        RunManifest {
            started_at_unix_ms: 0,
            duration_seconds: 0.0,
            ..self.clone()
        }
    }

    pub fn summary(&self, component: crate::analysis::Component) -> Option<&OscillationSummary> {
        self.summaries.iter().find(|s| s.component == component)
    }

    pub fn drift(&self, name: &str) -> Option<f64> {
        self.invariant_drifts.iter().find(|d| d.name == name).map(|d| d.drift)
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), HarnessError> {
        let path = path.as_ref();
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }
}
