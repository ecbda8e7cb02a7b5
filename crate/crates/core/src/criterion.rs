//! The scalar criterion `f` that instantiates the GAN objective family.
//!
//! The tiny-GAN objective places real data at a single point `α`, generated
//! data at a single point `θ`, and uses a linear discriminator `D(x) = ψx`,
//! so the whole objective collapses to `L(θ, ψ, α) = f(ψθ) + f(−ψα)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{finite, DomainError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// `f(y) = y`, the Wasserstein case.
    Linear,
    /// `f(y) = −log(1 + e^(−y))`, the standard-GAN case.
    Logistic,
}

impl Criterion {
    /// `f(y)`, rejecting non-finite input.
    pub fn value(self, y: f64) -> Result<f64, DomainError> {
        finite("y", y).map(|y| self.value_unchecked(y))
    }

    /// `f′(y)`, rejecting non-finite input.
    pub fn slope(self, y: f64) -> Result<f64, DomainError> {
        finite("y", y).map(|y| self.slope_unchecked(y))
    }

    pub(crate) fn value_unchecked(self, y: f64) -> f64 {
        match self {
            Criterion::Linear => y,
            Criterion::Logistic => -softplus(-y),
        }
    }

    pub(crate) fn slope_unchecked(self, y: f64) -> f64 {
        match self {
            Criterion::Linear => 1.0,
            // sigmoid(−y), branched so exp never overflows
            Criterion::Logistic => {
                if y >= 0.0 {
                    let e = (-y).exp();
                    e / (1.0 + e)
                } else {
                    1.0 / (1.0 + y.exp())
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Linear => "linear",
            Criterion::Logistic => "logistic",
        }
    }
}

/// `log(1 + e^x)` without overflow for large `|x|`.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Criterion::Linear),
            "logistic" => Ok(Criterion::Logistic),
            other => Err(DomainError::Invalid(format!(
                "unknown criterion {other:?} (expected \"linear\" or \"logistic\")"
            ))),
        }
    }
}

/// The tiny-GAN objective `f(ψθ) + f(−ψα)`.
pub fn tiny_gan_loss(c: Criterion, theta: f64, psi: f64, alpha: f64) -> Result<f64, DomainError> {
    finite("theta", theta)?;
    finite("psi", psi)?;
    finite("alpha", alpha)?;
    Ok(c.value_unchecked(psi * theta) + c.value_unchecked(-psi * alpha))
}
