//! Post-processing of simulated trajectories.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::integrator::{EventKind, Sample, Termination, Trajectory};
use crate::plant::{invariant_set, PositionBand};
use crate::{Error, Result};

/// Default relative tolerance on successive half-swing amplitudes.
pub const DEFAULT_REL_TOL: f64 = 0.01;
const MIN_REVERSALS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reversal {
    pub t: f64,
    pub x1: f64,
    /// Normalized friction `f/C_f` at the reversal.
    pub f_p: f64,
}

/// Motion reversals, from the event log when there is one, otherwise from
/// sign changes of the sampled velocity. A stick phase that is left in the
/// opposite direction counts as a reversal at the stop.
pub fn detect_reversals(traj: &Trajectory) -> Vec<Reversal> {
    let c_f = traj.plant.friction.c_f;
    let norm = |f: f64| if c_f > 0.0 { f / c_f } else { 0.0 };
    if !traj.events.is_empty() {
        let mut out = Vec::new();
        let mut stop: Option<&crate::integrator::HybridEvent> = None;
        for e in &traj.events {
            match e.kind {
                EventKind::VelocityReversal => out.push(Reversal {
                    t: e.t,
                    x1: e.state_after.x1,
                    f_p: norm(e.friction_before),
                }),
                EventKind::StickEntry => stop = Some(e),
                EventKind::StickExit => {
                    if let Some(s) = stop.take() {
                        if s.friction_before * e.friction_after < 0.0 {
                            out.push(Reversal {
                                t: s.t,
                                x1: s.state_after.x1,
                                f_p: norm(s.friction_before),
                            });
                        }
                    }
                }
                _ => {}
            }
        }
        return out;
    }
    let mut out = Vec::new();
    for w in traj.samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.x2 * b.x2 < 0.0 || (b.x2 == 0.0 && a.x2 != 0.0) {
            let s = a.x2 / (a.x2 - b.x2);
            out.push(Reversal {
                t: a.t + s * (b.t - a.t),
                x1: a.x1 + s * (b.x1 - a.x1),
                f_p: norm(a.f + s * (b.f - a.f)),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCycleReport {
    pub detected: bool,
    /// Half peak-to-peak of `x₁` over the final cycle.
    pub amplitude: f64,
    pub period: f64,
    /// Half-swing amplitudes `|x_{i+1} - x_i|/2` between reversals.
    pub reversal_amplitude_sequence: Vec<f64>,
    pub contraction_ratio: f64,
    /// Reversal times bounding the final full cycle.
    pub final_cycle: Option<(f64, f64)>,
}

/// Detect a steady oscillation from the convergence of reversal amplitudes.
pub fn detect_limit_cycle(traj: &Trajectory, rel_tol: f64) -> Result<LimitCycleReport> {
    if !(rel_tol > 0.0) {
        return Err(Error::Input(format!(
            "rel_tol must be positive, got {rel_tol}"
        )));
    }
    let rev = detect_reversals(traj);
    let halves: Vec<f64> = rev
        .windows(2)
        .map(|w| 0.5 * (w[1].x1 - w[0].x1).abs())
        .collect();
    if traj.termination == Termination::Converged {
        return Ok(LimitCycleReport {
            detected: false,
            amplitude: 0.0,
            period: 0.0,
            reversal_amplitude_sequence: halves,
            contraction_ratio: 0.0,
            final_cycle: None,
        });
    }
    if rev.len() < MIN_REVERSALS {
        return Err(Error::InsufficientData(format!(
            "{} reversals, need at least {MIN_REVERSALS}",
            rev.len()
        )));
    }
    let n = halves.len();
    let changes: Vec<f64> = halves
        .windows(2)
        .map(|w| {
            if w[0] > 0.0 {
                (w[1] - w[0]).abs() / w[0]
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let steady = changes[changes.len() - 3..].iter().all(|c| *c < rel_tol);

    let diffs: Vec<f64> = halves.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let mut ratios: Vec<f64> = diffs[diffs.len() - 3..]
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect();
    ratios.sort_by(f64::total_cmp);
    let contraction_ratio = ratios[ratios.len() / 2];

    let last = &rev[rev.len() - 3..];
    let (t0, t1) = (last[0].t, last[2].t);
    let (lo, hi) = traj
        .samples
        .iter()
        .filter(|s| s.t >= t0 && s.t <= t1)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.x1), hi.max(s.x1))
        });
    let amplitude = if hi >= lo {
        0.5 * (hi - lo)
    } else {
        halves[n - 1]
    };
    let period = t1 - t0;
    Ok(LimitCycleReport {
        detected: steady && amplitude > 0.0 && period > 0.0,
        amplitude,
        period,
        reversal_amplitude_sequence: halves,
        contraction_ratio,
        final_cycle: Some((t0, t1)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateError {
    pub window: (f64, f64),
    pub mean_abs_error: f64,
    /// Theoretical set of rest positions, when bounded.
    pub band: Option<PositionBand>,
}

/// Time-averaged `|x₁ - reference|` over the trailing `window_fraction` of
/// the run horizon. Past the last sample the terminal state holds.
pub fn steady_state_error(
    traj: &Trajectory,
    reference: f64,
    window_fraction: f64,
) -> Result<SteadyStateError> {
    if !(window_fraction > 0.0 && window_fraction < 1.0) {
        return Err(Error::Input(format!(
            "window_fraction must lie in (0, 1), got {window_fraction}"
        )));
    }
    let last = traj
        .samples
        .last()
        .ok_or_else(|| Error::InsufficientData("empty trajectory".into()))?;
    let t_end = traj.horizon.max(last.t);
    let t_start = t_end * (1.0 - window_fraction);
    let e = |s: &Sample| (s.x1 - reference).abs();

    let mut integral = 0.0;
    let mut prev_t = t_start;
    let mut prev_e = traj
        .interpolate(t_start, |s| s.x1)
        .map(|x| (x - reference).abs())
        .unwrap_or(0.0);
    for s in traj
        .samples
        .iter()
        .filter(|s| s.t > t_start && s.t <= t_end)
    {
        integral += 0.5 * (prev_e + e(s)) * (s.t - prev_t);
        prev_t = s.t;
        prev_e = e(s);
    }
    integral += prev_e * (t_end - prev_t);
    Ok(SteadyStateError {
        window: (t_start, t_end),
        mean_abs_error: integral / (t_end - t_start),
        band: invariant_set(&traj.plant).ok(),
    })
}

fn column_at(traj: &Trajectory, t: f64, col: impl Fn(&Sample) -> f64) -> Result<f64> {
    traj.interpolate(t, col)
        .ok_or_else(|| Error::InsufficientData("empty trajectory".into()))
}

fn check_cycle(traj: &Trajectory, cycle: (f64, f64)) -> Result<()> {
    let (t1, t2) = cycle;
    let (first, last) = match (traj.samples.first(), traj.samples.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => return Err(Error::InsufficientData("empty trajectory".into())),
    };
    if !(t1 <= t2 && t1 >= first && t2 <= last) {
        return Err(Error::Input(format!(
            "cycle ({t1}, {t2}) outside trajectory span ({first}, {last})"
        )));
    }
    Ok(())
}

/// Tolerance on the friction mismatch between the ends of a closed cycle,
/// relative to `C_f`.
pub const CYCLE_CLOSURE_TOL: f64 = 1e-2;

/// `∮ f dx₁` over `[t1, t2]`; positive values are dissipated energy.
pub fn hysteresis_loop_energy(traj: &Trajectory, cycle: (f64, f64)) -> Result<f64> {
    check_cycle(traj, cycle)?;
    let (t1, t2) = cycle;
    if t1 == t2 {
        return Ok(0.0);
    }
    let f1 = column_at(traj, t1, |s| s.f)?;
    let f2 = column_at(traj, t2, |s| s.f)?;
    let tol = CYCLE_CLOSURE_TOL * traj.plant.friction.c_f.max(f64::MIN_POSITIVE);
    if (f1 - f2).abs() > tol {
        return Err(Error::Cycle(format!(
            "friction at cycle ends differs: {f1} vs {f2}"
        )));
    }
    let mut pts: Vec<(f64, f64)> = vec![(column_at(traj, t1, |s| s.x1)?, f1)];
    pts.extend(
        traj.samples
            .iter()
            .filter(|s| s.t > t1 && s.t < t2)
            .map(|s| (s.x1, s.f)),
    );
    pts.push((column_at(traj, t2, |s| s.x1)?, f2));
    Ok(pts
        .windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBalance {
    /// Relay input `∫u dx₁`.
    pub input: f64,
    /// Friction dissipation `∫f dx₁`.
    pub dissipated: f64,
}

impl EnergyBalance {
    pub fn relative_mismatch(&self) -> f64 {
        (self.input - self.dissipated).abs() / self.input.abs().max(self.dissipated.abs())
    }
}

/// Input and dissipated energy over `[t1, t2]` from the work integrals
/// carried along the trajectory.
pub fn cycle_energy_balance(traj: &Trajectory, cycle: (f64, f64)) -> Result<EnergyBalance> {
    check_cycle(traj, cycle)?;
    let (t1, t2) = cycle;
    Ok(EnergyBalance {
        input: column_at(traj, t2, |s| s.work_u)? - column_at(traj, t1, |s| s.work_u)?,
        dissipated: column_at(traj, t2, |s| s.work_f)? - column_at(traj, t1, |s| s.work_f)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Dominant angular frequency, rad/s.
    pub omega: f64,
    /// First-harmonic amplitude of `x₁` at that frequency.
    pub amplitude: f64,
}

const SPECTRUM_POINTS: usize = 4096;
const OVERSAMPLE: usize = 4;

/// Dominant tone of `x₁` over the second half of the run.
pub fn oscillation_spectrum(traj: &Trajectory) -> Result<Spectrum> {
    if matches!(
        traj.termination,
        Termination::Converged | Termination::StuckOffOrigin
    ) {
        return Err(Error::Inconclusive(format!(
            "run terminated {}, no steady oscillation",
            traj.termination.name()
        )));
    }
    let last = traj
        .samples
        .last()
        .ok_or_else(|| Error::Inconclusive("empty trajectory".into()))?;
    let t_end = last.t;
    let t0 = 0.5 * t_end;
    let n = SPECTRUM_POINTS;
    let dt = (t_end - t0) / n as f64;
    if !(dt > 0.0) {
        return Err(Error::Inconclusive("trajectory too short".into()));
    }
    let mut x: Vec<f64> = (0..n)
        .map(|i| {
            traj.interpolate(t0 + dt * i as f64, |s| s.x1)
                .unwrap_or(0.0)
        })
        .collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    x.iter_mut().for_each(|v| *v -= mean);
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 1e-300) || scale <= 1e-12 * mean.abs() {
        return Err(Error::Inconclusive("flat signal".into()));
    }

    let dft = |omega: f64| -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (i, v) in x.iter().enumerate() {
            let ph = omega * dt * i as f64;
            re += v * ph.cos();
            im -= v * ph.sin();
        }
        re.hypot(im)
    };
    let d_omega = 2.0 * PI / (n as f64 * dt) / OVERSAMPLE as f64;
    let bins = n / 2 * OVERSAMPLE;
    let mags: Vec<f64> = (1..bins).map(|j| dft(d_omega * j as f64)).collect();
    let (k, &peak) = mags
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Inconclusive("empty spectrum".into()))?;
    let mut sorted = mags.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    if !(peak > 10.0 * median) {
        return Err(Error::Inconclusive(format!(
            "no dominant peak (peak {peak:e}, median {median:e})"
        )));
    }
    let mut j = (k + 1) as f64;
    if k > 0 && k + 1 < mags.len() {
        let (a, b, c) = (mags[k - 1], mags[k], mags[k + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            j += (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
        }
    }
    let omega = j * d_omega;
    Ok(Spectrum {
        omega,
        amplitude: 2.0 * dft(omega) / n as f64,
    })
}
