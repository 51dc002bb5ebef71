//! Relay-based Coulomb friction compensation for one-degree-of-freedom
//! motion systems.
//!
//! The crate simulates the closed loop `ẍ = -k·x - c·ẋ - f(ẋ) - γ·sign(x)`
//! as a hybrid system (stick/slip, presliding hysteresis, optional actuator
//! lag) and provides the analyses that go with it: Lyapunov convergence-time
//! bounds, gain sweeps, describing-function chattering prediction and
//! limit-cycle detection.
//!
//! All quantities are normalized to unit mass, so forces are expressed as
//! accelerations.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
mod error;
pub mod friction;
pub mod harmonic;
pub mod integrator;
pub mod lyapunov;
pub mod plant;
pub mod tuning;

pub use error::{Error, Result};
pub use friction::{Direction, ForceValue, FrictionModel, FrictionParams, PreslidingState, Regime};
pub use integrator::{
    integrate, ConvergenceNorm, EventKind, HybridEvent, Sample, Scenario, Termination, Trajectory,
};
pub use plant::{Motion, PlantParams, SystemState};
