//! Experiment configuration files (TOML).
//!
//! ```toml
//! name = "fig1c"
//! criterion = "linear"
//! init = "beta-init"
//! outputs = ["trajectory-csv", "manifest-json", "plot-svg"]
//! output_dir = "out"
//!
//! [mode]
//! kind = "annealed"
//! lambda = 0
//! alpha0 = 1.0
//! alpha_r = 3.0
//! T = 3.0
//! coupling_sign = "descent"
//!
//! [integrator]
//! method = "rk4"
//! step = 0.001
//! t_end = 60.0
//! ```
//!
//! Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::criterion::Criterion;
use crate::dynamics::{
    beta_gan_initial_state, AnnealedMode, AnnealingSchedule, Coupling, CouplingSign, State,
    SystemMode,
};
use crate::error::HarnessError;
use crate::integrator::{IntegratorConfig, SgdConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModeSpec {
    Autonomous {
        alpha_r: f64,
    },
    Annealed {
        lambda: i64,
        alpha0: f64,
        alpha_r: f64,
        #[serde(rename = "T")]
        time_constant: f64,
        #[serde(default)]
        coupling_sign: CouplingSign,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitMarker {
    #[serde(rename = "beta-init")]
    BetaInit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitInit {
    pub theta: f64,
    pub psi: f64,
    /// Required in annealed mode; must be absent in autonomous mode, where
    /// α is frozen at `alpha_r`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitSpec {
    Marker(InitMarker),
    Explicit(ExplicitInit),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputKind {
    TrajectoryCsv,
    ManifestJson,
    PlotSvg,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    /// Defaults to `max(10·T, 20)` for annealed runs and 0 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transient_cut: Option<f64>,
    /// Declared `(θ, ψ, α)` equilibrium; defaults to `(α_r, 0, α_r)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<[f64; 3]>,
}

impl AnalysisSpec {
    fn is_empty(&self) -> bool {
        self.transient_cut.is_none() && self.target.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub criterion: Criterion,
    pub init: InitSpec,
    /// Defaults to every output kind.
    #[serde(default = "all_outputs")]
    pub outputs: Vec<OutputKind>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub mode: ModeSpec,
    pub integrator: IntegratorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sgd: Option<SgdConfig>,
    #[serde(default, skip_serializing_if = "AnalysisSpec::is_empty")]
    pub analysis: AnalysisSpec,
}

pub(crate) fn all_outputs() -> Vec<OutputKind> {
    vec![OutputKind::TrajectoryCsv, OutputKind::ManifestJson, OutputKind::PlotSvg]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A validated config, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedExperiment {
    pub config: ExperimentConfig,
    pub mode: SystemMode,
    pub init: State,
    pub transient_cut: f64,
    pub target: [f64; 3],
}

impl ModeSpec {
    pub fn to_mode(&self) -> Result<SystemMode, HarnessError> {
        match *self {
            ModeSpec::Autonomous { alpha_r } => {
                if !alpha_r.is_finite() {
                    return Err(HarnessError::Validation("mode.alpha_r must be finite".into()));
                }
                Ok(SystemMode::Autonomous { alpha_r })
            }
            ModeSpec::Annealed {
                lambda,
                alpha0,
                alpha_r,
                time_constant,
                coupling_sign,
            } => {
                let coupling = Coupling::try_from(lambda)
                    .map_err(|e| HarnessError::Validation(format!("mode.lambda: {e}")))?;
                let schedule = AnnealingSchedule::new(alpha0, alpha_r, time_constant)
                    .map_err(|e| HarnessError::Validation(format!("mode: {e}")))?;
                Ok(SystemMode::Annealed(AnnealedMode {
                    coupling,
                    schedule,
                    sign: coupling_sign,
                }))
            }
        }
    }

    pub fn alpha_r(&self) -> f64 {
        match *self {
            ModeSpec::Autonomous { alpha_r } | ModeSpec::Annealed { alpha_r, .. } => alpha_r,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    /// Checks every cross-field invariant and builds the runnable form.
    pub fn resolve(&self) -> Result<ResolvedExperiment, HarnessError> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        {
            return Err(HarnessError::Validation(format!(
                "name {:?} must be non-empty and use only [A-Za-z0-9._-]",
                self.name
            )));
        }
        let mode = self.mode.to_mode()?;
        self.integrator
            .validate()
            .map_err(|e| HarnessError::Validation(format!("integrator: {e}")))?;
        if let Some(sgd) = &self.sgd {
            sgd.validate()
                .map_err(|e| HarnessError::Validation(format!("sgd: {e}")))?;
        }

        let init = match (&self.init, &mode) {
            (InitSpec::Marker(InitMarker::BetaInit), SystemMode::Annealed(m)) => {
                beta_gan_initial_state(&m.schedule)
            }
            (InitSpec::Marker(InitMarker::BetaInit), SystemMode::Autonomous { .. }) => {
                return Err(HarnessError::Validation(
                    "init = \"beta-init\" is only permitted in annealed mode".into(),
                ))
            }
            (InitSpec::Explicit(e), SystemMode::Autonomous { alpha_r }) => {
                if e.alpha.is_some() {
                    return Err(HarnessError::Validation(
                        "init.alpha must be omitted in autonomous mode (alpha is frozen at mode.alpha_r)".into(),
                    ));
                }
                State::new(0.0, e.theta, e.psi, *alpha_r)
            }
            (InitSpec::Explicit(e), SystemMode::Annealed(_)) => {
                let alpha = e.alpha.ok_or_else(|| {
                    HarnessError::Validation("init.alpha is required in annealed mode".into())
                })?;
                State::new(0.0, e.theta, e.psi, alpha)
            }
        };
        if !init.is_finite() {
            return Err(HarnessError::Validation("init must be finite".into()));
        }

        let transient_cut = self
            .analysis
            .transient_cut
            .unwrap_or_else(|| crate::analysis::default_transient_cut(&mode));
        if !(transient_cut.is_finite() && transient_cut >= 0.0) {
            return Err(HarnessError::Validation(
                "analysis.transient_cut must be finite and non-negative".into(),
            ));
        }
        let alpha_r = mode.alpha_r();
        let target = self.analysis.target.unwrap_or([alpha_r, 0.0, alpha_r]);
        if target.iter().any(|v| !v.is_finite()) {
            return Err(HarnessError::Validation("analysis.target must be finite".into()));
        }
        Ok(ResolvedExperiment {
            config: self.clone(),
            mode,
            init,
            transient_cut,
            target,
        })
    }

    pub fn wants(&self, kind: OutputKind) -> bool {
        self.outputs.contains(&kind)
    }
}
