//! Coulomb friction laws.
//!
//! Two models are provided:
//!
//! - the discontinuous law `-C_f·sign(ẋ)`, set-valued at zero velocity;
//! - a discontinuity-free presliding law in which every motion reversal
//!   starts a new force branch `f_p(z) = |σ - f_r|·f₀(z) + f_r`, where
//!   `z` is the scaled displacement since the reversal, `σ` the new motion
//!   direction and `f_r` the (normalized) friction at the reversal. Once
//!   `|z|` reaches one the force saturates at `C_f·σ` (sliding).
//!
//! Sign conventions: [`coulomb_force`] returns the force exerted *on the
//! mass*, while [`presliding_force`] and [`continuous_friction`] return the
//! friction reaction `f` as it appears in `ẍ + f + … = 0`, i.e. with the
//! same sign as the motion.

use std::ops::{Add, Neg};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrictionModel {
    Discontinuous,
    Presliding,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrictionParams {
    /// Coulomb friction level, acceleration units.
    pub c_f: f64,
    /// Presliding scaling factor, 1/m. Ignored by the discontinuous model.
    pub s: f64,
    pub model: FrictionModel,
}

impl FrictionParams {
    pub fn discontinuous(c_f: f64) -> Result<Self> {
        let p = Self {
            c_f,
            s: 0.0,
            model: FrictionModel::Discontinuous,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn presliding(c_f: f64, s: f64) -> Result<Self> {
        let p = Self {
            c_f,
            s,
            model: FrictionModel::Presliding,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_f.is_finite() && self.c_f > 0.0) {
            return Err(Error::Input(format!(
                "c_f must be positive, got {}",
                self.c_f
            )));
        }
        if self.model == FrictionModel::Presliding && !(self.s.is_finite() && self.s > 0.0) {
            return Err(Error::Input(format!(
                "presliding scaling factor s must be positive, got {}",
                self.s
            )));
        }
        Ok(())
    }
}

/// Direction of motion, never zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Negative,
    Positive,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Negative => -1.0,
            Direction::Positive => 1.0,
        }
    }

    /// Direction of a nonzero value; `None` for zero or NaN.
    pub fn of(v: f64) -> Option<Self> {
        if v > 0.0 {
            Some(Direction::Positive)
        } else if v < 0.0 {
            Some(Direction::Negative)
        } else {
            None
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Direction::Negative => Direction::Positive,
            Direction::Positive => Direction::Negative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Presliding,
    Sliding,
}

/// Memory of the presliding friction law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreslidingState {
    /// Scaled displacement since the last reversal, in [-1, 1].
    pub z: f64,
    /// Normalized friction at the last reversal, in [-1, 1].
    pub f_r: f64,
    pub regime: Regime,
}

impl Default for PreslidingState {
    fn default() -> Self {
        Self {
            z: 0.0,
            f_r: 0.0,
            regime: Regime::Presliding,
        }
    }
}

/// A force that is either single-valued or, on a switching surface, a
/// closed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ForceValue {
    Single(f64),
    Interval { lo: f64, hi: f64 },
}

impl ForceValue {
    pub fn interval(a: f64, b: f64) -> Self {
        ForceValue::Interval {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn lo(&self) -> f64 {
        match *self {
            ForceValue::Single(v) => v,
            ForceValue::Interval { lo, .. } => lo,
        }
    }

    pub fn hi(&self) -> f64 {
        match *self {
            ForceValue::Single(v) => v,
            ForceValue::Interval { hi, .. } => hi,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo() <= v && v <= self.hi()
    }

    pub fn single(&self) -> Option<f64> {
        match *self {
            ForceValue::Single(v) => Some(v),
            ForceValue::Interval { .. } => None,
        }
    }

    pub fn is_set_valued(&self) -> bool {
        matches!(self, ForceValue::Interval { .. })
    }
}

impl From<f64> for ForceValue {
    fn from(v: f64) -> Self {
        ForceValue::Single(v)
    }
}

impl Add for ForceValue {
    type Output = ForceValue;

    fn add(self, rhs: ForceValue) -> ForceValue {
        match (self, rhs) {
            (ForceValue::Single(a), ForceValue::Single(b)) => ForceValue::Single(a + b),
            (a, b) => ForceValue::Interval {
                lo: a.lo() + b.lo(),
                hi: a.hi() + b.hi(),
            },
        }
    }
}

impl Add<f64> for ForceValue {
    type Output = ForceValue;

    fn add(self, rhs: f64) -> ForceValue {
        self + ForceValue::Single(rhs)
    }
}

impl Neg for ForceValue {
    type Output = ForceValue;

    fn neg(self) -> ForceValue {
        match self {
            ForceValue::Single(v) => ForceValue::Single(-v),
            ForceValue::Interval { lo, hi } => ForceValue::Interval { lo: -hi, hi: -lo },
        }
    }
}

/// Force exerted on the mass by discontinuous Coulomb friction.
///
/// Set-valued `[-C_f, C_f]` at zero velocity.
pub fn coulomb_force(x2: f64, p: &FrictionParams) -> Result<ForceValue> {
    if !x2.is_finite() {
        return Err(Error::Input(format!("velocity must be finite, got {x2}")));
    }
    Ok(match Direction::of(x2) {
        Some(d) => ForceValue::Single(-p.c_f * d.sign()),
        None => ForceValue::interval(-p.c_f, p.c_f),
    })
}

/// Unchecked presliding branch `z·(1 - ln|z|)`, continuous at zero.
#[inline]
pub(crate) fn branch(z: f64) -> f64 {
    if z == 0.0 {
        0.0
    } else {
        z * (1.0 - z.abs().ln())
    }
}

/// Presliding branch curve `f₀(z) = z·(1 - ln|z|)` on `[-1, 1]`.
pub fn presliding_branch(z: f64) -> Result<f64> {
    if !(z.abs() <= 1.0) {
        return Err(Error::Domain(format!(
            "presliding distance must satisfy |z| <= 1, got {z}"
        )));
    }
    Ok(branch(z))
}

/// Friction reaction on a presliding branch:
/// `C_f·(|σ - f_r|·f₀(z) + f_r)`.
pub fn presliding_force(
    ps: &PreslidingState,
    direction: Direction,
    p: &FrictionParams,
) -> Result<ForceValue> {
    if !(ps.f_r.abs() <= 1.0) {
        return Err(Error::State(format!(
            "reversal memory must satisfy |f_r| <= 1, got {}",
            ps.f_r
        )));
    }
    let f0 = presliding_branch(ps.z)?;
    Ok(ForceValue::Single(
        p.c_f * normalized_branch_force(ps.f_r, direction, f0),
    ))
}

#[inline]
pub(crate) fn normalized_branch_force(f_r: f64, direction: Direction, f0: f64) -> f64 {
    (direction.sign() - f_r).abs() * f0 + f_r
}

/// Overall continuous friction reaction: presliding branch while
/// `|z| <= 1`, `C_f·σ` once sliding.
pub fn continuous_friction(
    ps: &PreslidingState,
    direction: Direction,
    p: &FrictionParams,
) -> Result<ForceValue> {
    match ps.regime {
        Regime::Presliding => presliding_force(ps, direction, p),
        Regime::Sliding => Ok(ForceValue::Single(p.c_f * direction.sign())),
    }
}

/// Restart the presliding branch after a motion reversal.
///
/// `f_p_at_reversal` is the normalized friction at the reversal instant and
/// becomes the new memory value.
pub fn reversal_update(_ps: &PreslidingState, f_p_at_reversal: f64) -> PreslidingState {
    debug_assert!(f_p_at_reversal.abs() <= 1.0 + 1e-9);
    PreslidingState {
        z: 0.0,
        f_r: f_p_at_reversal.clamp(-1.0, 1.0),
        regime: Regime::Presliding,
    }
}

/// Accumulate `s·x₂·dt` into the presliding distance. Crossing `|z| = 1`
/// clamps `z` and switches to sliding; sliding persists until the next
/// reversal.
pub fn advance_presliding_distance(
    ps: &PreslidingState,
    x2: f64,
    dt: f64,
    p: &FrictionParams,
) -> PreslidingState {
    if ps.regime == Regime::Sliding {
        return *ps;
    }
    let z = ps.z + p.s * x2 * dt;
    if z.abs() >= 1.0 {
        PreslidingState {
            z: z.signum(),
            f_r: ps.f_r,
            regime: Regime::Sliding,
        }
    } else {
        PreslidingState { z, ..*ps }
    }
}
