//! Relay gain tuning: the analytic convergence-time bound as a function of
//! `γ/C_f`, its minimization, and a simulation-based sweep.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::friction::FrictionModel;
use crate::integrator::{integrate, Scenario, Termination};
use crate::lyapunov::{convergence_time_bound, twisting_bounds};
use crate::plant::SystemState;
use crate::{Error, Result};

/// Optimal `γ/C_f` quoted in the literature for this compensator.
pub const LITERATURE_OPTIMAL_RATIO: f64 = 1.119;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSweepResult {
    /// `γ/C_f` ratios, strictly increasing.
    pub grid: Vec<f64>,
    /// Analytic bound per ratio; `+∞` where the ratio admits no bound.
    pub bound_values: Vec<f64>,
    /// Simulated convergence times; `+∞` for runs that never converged.
    pub sim_times: Option<Vec<f64>>,
    pub argmin_bound: Option<f64>,
    pub argmin_sim: Option<f64>,
    /// Whether the bound is monotone over the grid.
    pub monotonic_flag: bool,
}

impl GainSweepResult {
    pub fn converged(&self) -> Vec<bool> {
        match &self.sim_times {
            Some(t) => t.iter().map(|v| v.is_finite()).collect(),
            None => vec![false; self.grid.len()],
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Input("empty ratio grid".into()));
    }
    if grid.iter().any(|r| !r.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input(
            "ratio grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

fn bound_at(c_f: f64, x1_0: f64, ratio: f64) -> f64 {
    match twisting_bounds(ratio * c_f, c_f, 0.0) {
        Ok(b) => convergence_time_bound(&SystemState::new(x1_0, 0.0), &b),
        Err(_) => f64::INFINITY,
    }
}

fn argmin(grid: &[f64], values: &[f64]) -> Option<f64> {
    grid.iter()
        .zip(values)
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(r, _)| *r)
}

fn monotone(values: &[f64]) -> bool {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    finite.windows(2).all(|w| w[1] >= w[0]) || finite.windows(2).all(|w| w[1] <= w[0])
}

/// Convergence-time bound for a start at rest at `x1_0` over a ratio grid.
pub fn bound_curve(c_f: f64, x1_0: f64, grid: &[f64]) -> Result<GainSweepResult> {
    check_grid(grid)?;
    if !(c_f > 0.0 && c_f.is_finite() && x1_0.is_finite()) {
        return Err(Error::Input(format!(
            "invalid C_f = {c_f} or x1_0 = {x1_0}"
        )));
    }
    if let Some(r) = grid.iter().find(|r| **r <= 1.0) {
        return Err(Error::Domain(format!(
            "ratio {r} <= 1 has no convergence bound"
        )));
    }
    let bound_values: Vec<f64> = grid.iter().map(|&r| bound_at(c_f, x1_0, r)).collect();
    Ok(GainSweepResult {
        grid: grid.to_vec(),
        argmin_bound: argmin(grid, &bound_values),
        monotonic_flag: monotone(&bound_values),
        bound_values,
        sim_times: None,
        argmin_sim: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Stationarity {
    /// Interior stationary minimum.
    Interior { ratio: f64, value: f64 },
    /// No interior stationary point: the objective is monotone on the
    /// interval and its infimum sits at `boundary_ratio`.
    Monotone {
        trend: Trend,
        boundary_ratio: f64,
        boundary_value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeReport {
    pub interval: (f64, f64),
    pub result: Stationarity,
    pub literature_ratio: f64,
    /// Objective at the literature ratio, when it lies in the interval.
    pub value_at_literature_ratio: Option<f64>,
}

const SCAN_POINTS: usize = 4001;

/// Minimize a scalar objective on `[lo, hi]` by a dense scan followed by
/// bisection on the sign of its central-difference derivative.
pub fn minimize_scan<F: Fn(f64) -> f64>(objective: F, lo: f64, hi: f64) -> Result<Stationarity> {
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(Error::Input(format!("invalid interval [{lo}, {hi}]")));
    }
    let xs: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64)
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&x| objective(x)).collect();
    let (imin, _) = fs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Input("empty scan".into()))?;
    if imin == 0 || imin == SCAN_POINTS - 1 {
        let trend = if imin == 0 {
            Trend::Increasing
        } else {
            Trend::Decreasing
        };
        return Ok(Stationarity::Monotone {
            trend,
            boundary_ratio: xs[imin],
            boundary_value: fs[imin],
        });
    }
    let step = xs[1] - xs[0];
    let h = 1e-3 * step;
    let slope = |x: f64| objective(x + h) - objective(x - h);
    let (mut a, mut b) = (xs[imin - 1], xs[imin + 1]);
    for _ in 0..200 {
        if b - a <= 1e-12 * b.abs().max(1.0) {
            break;
        }
        let m = 0.5 * (a + b);
        if slope(m) > 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    let ratio = 0.5 * (a + b);
    Ok(Stationarity::Interior {
        ratio,
        value: objective(ratio),
    })
}

/// Search `(lo, hi]` for a stationary point of the bound curve.
pub fn minimize_bound(c_f: f64, x1_0: f64, lo: f64, hi: f64) -> Result<MinimizeReport> {
    if !(lo > 1.0) {
        return Err(Error::Domain(format!(
            "search interval must exclude ratios <= 1, got lo = {lo}"
        )));
    }
    let result = minimize_scan(|r| bound_at(c_f, x1_0, r), lo, hi)?;
    let lit = LITERATURE_OPTIMAL_RATIO;
    Ok(MinimizeReport {
        interval: (lo, hi),
        result,
        literature_ratio: lit,
        value_at_literature_ratio: (lo..=hi).contains(&lit).then(|| bound_at(c_f, x1_0, lit)),
    })
}

/// Simulate the double integrator at every ratio in `grid` and record the
/// time to reach the convergence ball.
pub fn empirical_gain_sweep(base: &Scenario, grid: &[f64]) -> Result<GainSweepResult> {
    check_grid(grid)?;
    let p = &base.plant;
    if p.friction.model != FrictionModel::Discontinuous
        || p.k != 0.0
        || p.c != 0.0
        || base.x0.x2 != 0.0
    {
        return Err(Error::Precondition(
            "gain sweep needs a double integrator with discontinuous friction started at rest"
                .into(),
        ));
    }
    if base.convergence_radius <= 0.0 {
        return Err(Error::Precondition(
            "gain sweep needs a positive convergence radius".into(),
        ));
    }
    let c_f = p.friction.c_f;
    let x1_0 = base.x0.x1;
    let sim_times: Vec<f64> = grid
        .par_iter()
        .map(|&ratio| {
            let mut sc = base.clone();
            sc.plant.gamma = ratio * c_f;
            match integrate(&sc) {
                Ok(tr) if tr.termination == Termination::Converged => {
                    tr.convergence_time.unwrap_or(f64::INFINITY)
                }
                Ok(_) => f64::INFINITY,
                Err(e) => {
                    warn!("gain sweep: ratio {ratio} failed: {e}");
                    f64::INFINITY
                }
            }
        })
        .collect();
    if sim_times.iter().all(|t| !t.is_finite()) {
        return Err(Error::SweepFailed(format!(
            "none of the {} grid points converged",
            grid.len()
        )));
    }
    let bound_values: Vec<f64> = grid.iter().map(|&r| bound_at(c_f, x1_0, r)).collect();
    Ok(GainSweepResult {
        grid: grid.to_vec(),
        argmin_bound: argmin(grid, &bound_values),
        argmin_sim: argmin(grid, &sim_times),
        monotonic_flag: monotone(&bound_values),
        bound_values,
        sim_times: Some(sim_times),
    })
}
