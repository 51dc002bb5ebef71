//! Closed-loop vector field of the relay-compensated plant
//!
//! `ẋ₁ = x₂`, `ẋ₂ = -k·x₁ - c·x₂ - f + u`, `u = -γ·sign(x₁)`,
//!
//! with its Filippov limit fields, the stick condition and the stiction set.

use serde::{Deserialize, Serialize};

use crate::friction::{
    continuous_friction, coulomb_force, Direction, ForceValue, FrictionModel, FrictionParams,
    PreslidingState,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    /// Stiffness-like feedback gain, 1/s².
    pub k: f64,
    /// Damping-like feedback gain, 1/s.
    pub c: f64,
    pub friction: FrictionParams,
    /// Relay gain, acceleration units.
    pub gamma: f64,
    /// Matched perturbation bound `F`.
    pub f_bound: f64,
    /// First-order actuator time constant, s.
    pub actuator_lag: Option<f64>,
}

impl PlantParams {
    pub fn new(k: f64, c: f64, friction: FrictionParams, gamma: f64) -> Result<Self> {
        let p = Self {
            k,
            c,
            friction,
            gamma,
            f_bound: 0.0,
            actuator_lag: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_actuator_lag(mut self, lag: f64) -> Result<Self> {
        self.actuator_lag = Some(lag);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.friction.validate()?;
        for (name, v) in [
            ("k", self.k),
            ("c", self.c),
            ("gamma", self.gamma),
            ("f_bound", self.f_bound),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Input(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if let Some(t) = self.actuator_lag {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Input(format!(
                    "actuator_lag must be positive, got {t}"
                )));
            }
        }
        Ok(())
    }

    /// Non-friction force at rest (`x₂ = 0`) for a given control value.
    pub fn rest_force(&self, x1: f64, u: f64) -> f64 {
        -self.k * x1 + u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Motion {
    Moving,
    Stuck,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub x1: f64,
    pub x2: f64,
    /// Presliding memory; only meaningful for the presliding model.
    pub presliding: PreslidingState,
    pub motion: Motion,
    /// Output of the actuator lag filter, when the plant has one.
    pub actuator: Option<f64>,
}

impl SystemState {
    pub fn new(x1: f64, x2: f64) -> Self {
        Self {
            x1,
            x2,
            presliding: PreslidingState::default(),
            motion: Motion::Moving,
            actuator: None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite()
            && self.x2.is_finite()
            && self.presliding.z.is_finite()
            && self.actuator.is_none_or(f64::is_finite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorFieldValue {
    pub dx1: f64,
    pub dx2: ForceValue,
}

/// Relay compensator `-γ·sign(x₁)`, set-valued on `x₁ = 0`.
pub fn relay_control(x1: f64, gamma: f64) -> ForceValue {
    match Direction::of(x1) {
        Some(d) => ForceValue::Single(-gamma * d.sign()),
        None => ForceValue::interval(-gamma, gamma),
    }
}

/// Friction reaction `f` for the plant's friction model at the given state.
fn friction_reaction(state: &SystemState, p: &PlantParams) -> Result<ForceValue> {
    let fp = &p.friction;
    match fp.model {
        FrictionModel::Discontinuous => Ok(-coulomb_force(state.x2, fp)?),
        FrictionModel::Presliding => {
            let direction = Direction::of(state.x2).or_else(|| Direction::of(state.presliding.z));
            match direction {
                Some(d) => continuous_friction(&state.presliding, d, fp),
                // z = 0: every branch starts at the memory value
                None => Ok(ForceValue::Single(fp.c_f * state.presliding.f_r)),
            }
        }
    }
}

/// Closed-loop vector field; set-valued components are kept as intervals.
pub fn closed_loop_field(state: &SystemState, p: &PlantParams) -> Result<VectorFieldValue> {
    if !state.is_finite() {
        return Err(Error::Input("state must be finite".into()));
    }
    let u = match (p.actuator_lag, state.actuator) {
        (Some(_), Some(ua)) => ForceValue::Single(ua),
        (Some(_), None) => {
            return Err(Error::State(
                "plant has actuator lag but state has no filter value".into(),
            ))
        }
        (None, _) => relay_control(state.x1, p.gamma),
    };
    let f = friction_reaction(state, p)?;
    let dx2 = -f + u + (-p.k * state.x1 - p.c * state.x2);
    Ok(VectorFieldValue { dx1: state.x2, dx2 })
}

/// Unforced one-sided limits `(g⁺, g⁻)` of the vector field on `x₂ = 0`.
pub fn filippov_limits(x1: f64, p: &PlantParams) -> (VectorFieldValue, VectorFieldValue) {
    let base = -p.k * x1;
    let c_f = p.friction.c_f;
    (
        VectorFieldValue {
            dx1: 0.0,
            dx2: ForceValue::Single(base - c_f),
        },
        VectorFieldValue {
            dx1: 0.0,
            dx2: ForceValue::Single(base + c_f),
        },
    )
}

/// Whether a state at rest at `x₁` stays stuck under the relay
/// (`|-k·x₁ - γ·sign(x₁)| <= C_f`). The origin always sticks.
pub fn stick_condition(x1: f64, p: &PlantParams) -> bool {
    match Direction::of(x1) {
        None => true,
        Some(d) => stick_condition_with_input(x1, -p.gamma * d.sign(), p),
    }
}

/// Stick condition for an explicit control value (actuator lag output).
pub fn stick_condition_with_input(x1: f64, u: f64, p: &PlantParams) -> bool {
    p.rest_force(x1, u).abs() <= p.friction.c_f
}

/// Closed set of rest positions on the `x₁` axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionBand {
    pub lo: f64,
    pub hi: f64,
}

impl PositionBand {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

/// Largest invariant (stiction) set on the `x₁` axis.
pub fn invariant_set(p: &PlantParams) -> Result<PositionBand> {
    let c_f = p.friction.c_f;
    if p.gamma > c_f {
        return Ok(PositionBand { lo: 0.0, hi: 0.0 });
    }
    if p.k <= 0.0 {
        return Err(Error::Unbounded(format!(
            "k = 0 with gamma = {} <= C_f = {c_f}: every position sticks",
            p.gamma
        )));
    }
    let w = (c_f - p.gamma) / p.k;
    Ok(PositionBand { lo: -w, hi: w })
}
