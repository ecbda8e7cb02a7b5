use thiserror::Error;

use crate::integrator::Trajectory;

/// Invalid argument to a pure model function.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("annealing time constant T must be positive, got {0}")]
    NonPositiveTimeConstant(f64),
    #[error("lambda must be 0 or 1, got {0}")]
    InvalidSwitch(i64),
    #[error("phase is undefined when the forcing K is zero")]
    UndefinedPhase,
    #[error("{0}")]
    Invalid(String),
}

pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64, DomainError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(DomainError::NonFinite { name, value })
    }
}

/// Failure while producing a trajectory.
#[derive(Debug, Error)]
pub enum IntegrationError {
    #[error("invalid integrator configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    /// The state left the finite region or crossed the magnitude guard.
    /// The samples produced up to (and including) the offending step are kept.
    #[error("integration diverged at t = {time}")]
    Diverged {
        time: f64,
        partial: Box<Trajectory>,
    },
    #[error("convergence study needs at least 3 surviving runs, got {0}")]
    InsufficientData(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("analysis window of {available} time units after the transient cut is shorter than the required {required}")]
    InsufficientWindow { available: f64, required: f64 },
    #[error("trajectory is empty")]
    EmptyTrajectory,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown scenario {0:?} (expected fig1a, fig1b, fig1c or fig1d)")]
    UnknownScenario(String),
    #[error("cannot parse config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Validation(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed trajectory CSV: {0}")]
    Csv(String),
    #[error("manifest serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error("nothing to plot")]
    EmptyPlot,
}

impl HarnessError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors caused by the user's input rather than the run itself.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            HarnessError::UnknownScenario(_)
                | HarnessError::Parse { .. }
                | HarnessError::Validation(_)
                | HarnessError::Domain(_)
        )
    }
}
