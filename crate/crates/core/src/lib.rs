//! Simulator for the minimax training dynamics of a one-point GAN.
//!
//! Generated data sits at `θ`, real data at `α` and the discriminator is
//! `D(x) = ψx`. The crate integrates the resulting gradient flow with data
//! either fixed or annealed along an exponential schedule, compares it with
//! closed-form solutions, and packages reproducible experiments.
//!
//! ```
//! use tinygan::analysis::{steady_summary, Component};
//! use tinygan::dynamics::beta_gan_initial_state;
//! use tinygan::integrator::integrate_system;
//! use tinygan::{AnnealedMode, AnnealingSchedule, Coupling, Criterion, IntegratorConfig, Method, System, SystemMode};
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let sch = AnnealingSchedule::new(1.0, 3.0, 3.0)?;
//! let mode = SystemMode::Annealed(AnnealedMode {
//!     coupling: Coupling::Decoupled,
//!     schedule: sch,
//!     sign: Default::default(),
//! });
//! let system = System::new(Criterion::Linear, mode);
//! let cfg = IntegratorConfig::new(Method::Rk4, 1e-3, 60.0);
//! let traj = integrate_system(&system, beta_gan_initial_state(&sch), &cfg)?;
//! let psi = steady_summary(&traj, Component::Psi, 30.0)?;
//! assert!((psi.amplitude - 2.0 / 10f64.sqrt()).abs() < 1e-3);
//! # Ok(())
//! # }
//! ```

pub mod analysis;
pub mod analytic;
pub mod criterion;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod integrator;

pub use criterion::{tiny_gan_loss, Criterion};
pub use dynamics::{
    AnnealedMode, AnnealingSchedule, Coupling, CouplingSign, State, System, SystemMode, VectorField,
};
pub use error::{AnalysisError, DomainError, HarnessError, IntegrationError};
pub use integrator::{IntegratorConfig, Method, SgdConfig, Trajectory, UpdateOrder};
