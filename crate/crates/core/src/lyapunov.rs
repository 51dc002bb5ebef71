//! Lyapunov functions for the closed loop, the twisting convergence-time
//! bound, and a finite-difference check of the derivative bound along
//! simulated trajectories.

use serde::{Deserialize, Serialize};

use crate::friction::{
    branch, normalized_branch_force, Direction, FrictionModel, FrictionParams, Regime,
};
use crate::integrator::Trajectory;
use crate::plant::SystemState;
use crate::{Error, Result};

/// Quadratic energy `½k·x₁² + ½x₂²`.
pub fn v_quadratic(x: &SystemState, k: f64) -> f64 {
    0.5 * k * x.x1 * x.x1 + 0.5 * x.x2 * x.x2
}

/// Rate of [`v_quadratic`] along the unforced loop: `-c·x₂² - C_f·|x₂|`.
pub fn v_quadratic_rate(x: &SystemState, c: f64, c_f: f64) -> f64 {
    -c * x.x2 * x.x2 - c_f * x.x2.abs()
}

/// Relay energy `½x₂² + γ·|x₁|` of the double integrator.
pub fn v_reduced(x: &SystemState, gamma: f64) -> f64 {
    0.5 * x.x2 * x.x2 + gamma * x.x1.abs()
}

/// Rate of [`v_reduced`]: `-x₂·f`, with `f` the friction reaction.
pub fn v_reduced_rate(x: &SystemState, p: &FrictionParams) -> f64 {
    let Some(d) = Direction::of(x.x2) else {
        return 0.0;
    };
    let f = match (p.model, x.presliding.regime) {
        (FrictionModel::Presliding, Regime::Presliding) => {
            p.c_f * normalized_branch_force(x.presliding.f_r, d, branch(x.presliding.z))
        }
        _ => p.c_f * d.sign(),
    };
    -x.x2 * f
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistingBounds {
    pub gamma: f64,
    pub c_f: f64,
    pub f: f64,
    /// `U = γ + C_f - F`
    pub u_upper: f64,
    /// `U* = γ - C_f + F`
    pub u_lower: f64,
    /// `√(U*/U)`
    pub r: f64,
    pub alpha: [f64; 4],
}

pub fn twisting_bounds(gamma: f64, c_f: f64, f: f64) -> Result<TwistingBounds> {
    if !(gamma.is_finite() && c_f.is_finite() && f.is_finite() && c_f >= 0.0 && f >= 0.0) {
        return Err(Error::Input(format!(
            "gains must be finite and non-negative (gamma = {gamma}, C_f = {c_f}, F = {f})"
        )));
    }
    let u = gamma + c_f - f;
    let us = gamma - c_f + f;
    if !(us > 0.0) {
        return Err(Error::StabilityViolation(format!(
            "relay gain gamma = {gamma} does not dominate C_f - F = {}",
            c_f - f
        )));
    }
    if !(u > us) {
        return Err(Error::StabilityViolation(format!(
            "requires C_f > F (C_f = {c_f}, F = {f})"
        )));
    }
    let r = (us / u).sqrt();
    let a1 = 1.0 / u;
    let a2 = (1.0 / r + r) / (u * (1.0 - r));
    let a3 = -1.0 / us;
    let a4 = a1 + a2 - a3;
    Ok(TwistingBounds {
        gamma,
        c_f,
        f,
        u_upper: u,
        u_lower: us,
        r,
        alpha: [a1, a2, a3, a4],
    })
}

/// Piecewise Lyapunov function of the twisting loop.
pub fn v_twisting(x: &SystemState, b: &TwistingBounds) -> f64 {
    let [a1, a2, a3, a4] = b.alpha;
    let (x1, x2) = (x.x1, x.x2);
    if x1 * x2 > 0.0 {
        a1 * x2.abs() + a2 * (x2 * x2 + 2.0 * b.u_upper * x1.abs()).sqrt()
    } else {
        a3 * x2.abs() + a4 * (x2 * x2 + 2.0 * b.u_lower * x1.abs()).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrant {
    /// `x₁·x₂ > 0`
    OddQuadrants,
    /// `x₁·x₂ < 0`
    EvenQuadrants,
}

impl Quadrant {
    pub fn of(x1: f64, x2: f64) -> Option<Self> {
        let p = x1 * x2;
        if p > 0.0 {
            Some(Quadrant::OddQuadrants)
        } else if p < 0.0 {
            Some(Quadrant::EvenQuadrants)
        } else {
            None
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Upper bound on `dV/dt` in the given quadrant pair.
pub fn vdot_bound(b: &TwistingBounds, q: Quadrant) -> f64 {
    match q {
        Quadrant::OddQuadrants => -1.0,
        Quadrant::EvenQuadrants => -(b.gamma - b.c_f - b.f) / (b.gamma + b.c_f + b.f),
    }
}

/// Upper bound on the time to reach the origin from `x0`.
///
/// Starts with `x₁x₂ > 0` get `V(x0)`; all others, including starts on the
/// `x₁` axis, get `r²·V(x0)`.
pub fn convergence_time_bound(x0: &SystemState, b: &TwistingBounds) -> f64 {
    let v = v_twisting(x0, b);
    if x0.x1 * x0.x2 > 0.0 {
        v
    } else {
        b.r * b.r * v
    }
}

/// Closed-form bound for a start at rest at `|x₁(0)|`, with `F = 0`:
/// `γ(1 + r)/(γC_f + C_f²)·√(2(γ - C_f)|x₁(0)|)`.
pub fn axis_start_bound(gamma: f64, c_f: f64, x1_abs: f64) -> f64 {
    let r = ((gamma - c_f) / (gamma + c_f)).sqrt();
    gamma * (1.0 + r) / (gamma * c_f + c_f * c_f) * (2.0 * (gamma - c_f) * x1_abs).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub quadrant: Quadrant,
    pub observed: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecreaseReport {
    /// Largest observed `ΔV/Δt`, indexed `[odd, even]`; `None` when the
    /// quadrant pair was never sampled.
    pub max_observed_rate: [Option<f64>; 2],
    pub bound: [f64; 2],
    pub violations: Vec<Violation>,
    pub checked_pairs: usize,
    pub exclusion_band: f64,
}

/// Exclusion band of two median sample steps of state travel.
pub fn default_exclusion_band(traj: &Trajectory) -> f64 {
    let mut d: Vec<f64> = traj
        .samples
        .windows(2)
        .map(|w| (w[1].x1 - w[0].x1).hypot(w[1].x2 - w[0].x2))
        .filter(|v| *v > 0.0)
        .collect();
    if d.is_empty() {
        return 0.0;
    }
    d.sort_by(f64::total_cmp);
    2.0 * d[d.len() / 2]
}

/// Check the derivative bound along a double-integrator trajectory.
pub fn verify_decrease(
    traj: &Trajectory,
    b: &TwistingBounds,
    exclusion_band: f64,
) -> Result<DecreaseReport> {
    let bound = [
        vdot_bound(b, Quadrant::OddQuadrants),
        vdot_bound(b, Quadrant::EvenQuadrants),
    ];
    verify_decrease_against(traj, b, bound, exclusion_band)
}

/// Same as [`verify_decrease`] with explicit per-quadrant rate bounds
/// `[odd, even]`.
pub fn verify_decrease_against(
    traj: &Trajectory,
    b: &TwistingBounds,
    bound: [f64; 2],
    exclusion_band: f64,
) -> Result<DecreaseReport> {
    let p = &traj.plant;
    if p.friction.model != FrictionModel::Discontinuous || p.k != 0.0 || p.c != 0.0 {
        return Err(Error::Precondition(
            "decrease check applies to the double integrator with discontinuous friction".into(),
        ));
    }
    if p.actuator_lag.is_some() {
        return Err(Error::Precondition(
            "decrease check does not apply with actuator lag".into(),
        ));
    }
    let mut report = DecreaseReport {
        max_observed_rate: [None, None],
        bound,
        violations: Vec::new(),
        checked_pairs: 0,
        exclusion_band,
    };
    let v = |x1: f64, x2: f64| v_twisting(&SystemState::new(x1, x2), b);
    for w in traj.samples.windows(2) {
        let (a, c) = (&w[0], &w[1]);
        let outside = |x1: f64, x2: f64| x1.abs().min(x2.abs()) > exclusion_band;
        if !(outside(a.x1, a.x2) && outside(c.x1, c.x2)) {
            continue;
        }
        let (Some(qa), Some(qc)) = (Quadrant::of(a.x1, a.x2), Quadrant::of(c.x1, c.x2)) else {
            continue;
        };
        // same quadrant, not just the same pair
        if qa != qc || a.x1.signum() != c.x1.signum() {
            continue;
        }
        let dt = c.t - a.t;
        let (va, vc) = (v(a.x1, a.x2), v(c.x1, c.x2));
        let rate = (vc - va) / dt;
        let i = qa.index();
        report.max_observed_rate[i] =
            Some(report.max_observed_rate[i].map_or(rate, |m: f64| m.max(rate)));
        report.checked_pairs += 1;
        // rounding of V plus the integrator's local error relative to V
        let tol = 1e-7 * (va.abs() + vc.abs()) / dt + 1e-6;
        if rate > bound[i] + tol {
            report.violations.push(Violation {
                t: a.t,
                quadrant: qa,
                observed: rate,
                bound: bound[i],
            });
        }
    }
    if report.checked_pairs < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} sample pairs outside the exclusion band {exclusion_band:e}",
            report.checked_pairs
        )));
    }
    Ok(report)
}
