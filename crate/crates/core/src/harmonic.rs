//! Describing-function prediction of chattering for the relay pair formed
//! by the compensator and Coulomb friction.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{detect_limit_cycle, oscillation_spectrum, DEFAULT_REL_TOL};
use crate::friction::FrictionModel;
use crate::integrator::{integrate, Scenario, Termination};
use crate::{Error, Result};

/// Rational transfer function with real coefficients in descending powers
/// of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPlant {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

fn trim(mut p: Vec<f64>) -> Vec<f64> {
    while p.len() > 1 && p[0] == 0.0 {
        p.remove(0);
    }
    p
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_eval(p: &[f64], s: Complex64) -> Complex64 {
    p.iter()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * s + c)
}

impl LinearPlant {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        let g = Self {
            num: trim(num),
            den: trim(den),
        };
        g.validate()?;
        Ok(g)
    }

    /// `1/(s² + c·s + k)`
    pub fn second_order(k: f64, c: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![1.0, c, k])
    }

    /// `1/(s²(T·s + 1))`
    pub fn double_integrator_with_lag(lag: f64) -> Result<Self> {
        Self::second_order(0.0, 0.0)?.with_actuator_lag(lag)
    }

    /// Multiply the denominator by `T·s + 1`.
    pub fn with_actuator_lag(self, lag: f64) -> Result<Self> {
        if !(lag.is_finite() && lag > 0.0) {
            return Err(Error::Input(format!(
                "actuator lag must be positive, got {lag}"
            )));
        }
        Self::new(self.num, poly_mul(&self.den, &[lag, 1.0]))
    }

    pub fn relative_degree(&self) -> usize {
        self.den.len().saturating_sub(self.num.len())
    }

    pub fn validate(&self) -> Result<()> {
        if self.num.is_empty() || self.den.is_empty() {
            return Err(Error::Input("empty polynomial".into()));
        }
        if self.num.iter().chain(&self.den).any(|c| !c.is_finite()) {
            return Err(Error::Input(
                "transfer function coefficients must be finite".into(),
            ));
        }
        if self.den[0] == 0.0 || self.num.iter().all(|c| *c == 0.0) {
            return Err(Error::Input("degenerate transfer function".into()));
        }
        if self.den.len() < self.num.len() + 2 {
            return Err(Error::Input(format!(
                "relative degree must be at least 2, got {}",
                self.den.len() as isize - self.num.len() as isize
            )));
        }
        Ok(())
    }
}

/// Describing function of `γ·sign(x)` plus Coulomb friction for a harmonic
/// input of amplitude `a1`: `(4/(π·a1))·(γ + j·C_f)`.
pub fn describing_function(a1: f64, gamma: f64, c_f: f64) -> Result<Complex64> {
    if !(a1 > 0.0) {
        return Err(Error::Domain(format!(
            "amplitude must be positive, got {a1}"
        )));
    }
    Ok(Complex64::new(gamma, c_f) * (4.0 / (PI * a1)))
}

/// `G(jω)`
pub fn plant_response(g: &LinearPlant, omega: f64) -> Result<Complex64> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Domain(format!(
            "frequency must be positive, got {omega}"
        )));
    }
    let s = Complex64::new(0.0, omega);
    let den = poly_eval(&g.den, s);
    let scale: f64 = g
        .den
        .iter()
        .rev()
        .enumerate()
        .map(|(i, c)| c.abs() * omega.powi(i as i32))
        .sum();
    if den.norm() <= 1e-13 * scale {
        return Err(Error::Singularity { omega });
    }
    Ok(poly_eval(&g.num, s) / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicBalanceSolution {
    pub exists: bool,
    pub omega_bar: Option<f64>,
    pub a1: Option<f64>,
    /// Minimum of `|arg G(jω) - (π - atan2(C_f, γ))|` (wrapped) over the
    /// search grid.
    pub phase_residual_min: f64,
    pub relative_degree: usize,
    /// Search range `[ω_min, ω_max]`, rad/s.
    pub search_range: (f64, f64),
}

pub const OMEGA_MIN: f64 = 1e-3;
pub const OMEGA_MAX: f64 = 1e6;
const POINTS_PER_DECADE: usize = 200;

fn wrap(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Solve the harmonic balance `G(jω)·N(a₁) = -1` by the phase condition
/// `arg G(jω) = π - atan2(C_f, γ)` and the matching amplitude.
pub fn solve_harmonic_balance(
    g: &LinearPlant,
    gamma: f64,
    c_f: f64,
) -> Result<HarmonicBalanceSolution> {
    if !(gamma >= 0.0 && gamma.is_finite() && c_f >= 0.0 && c_f.is_finite() && gamma + c_f > 0.0) {
        return Err(Error::Input(format!(
            "need gamma >= 0, C_f >= 0, not both zero (gamma = {gamma}, C_f = {c_f})"
        )));
    }
    g.validate()?;
    let target = PI - c_f.atan2(gamma);
    let residual = |w: f64| plant_response(g, w).map(|gw| wrap(gw.arg() - target));

    let decades = (OMEGA_MAX / OMEGA_MIN).log10();
    let n = (decades * POINTS_PER_DECADE as f64).round() as usize;
    let grid: Vec<f64> = (0..=n)
        .map(|i| OMEGA_MIN * 10f64.powf(decades * i as f64 / n as f64))
        .collect();

    let mut min_res = f64::INFINITY;
    let mut prev: Option<(f64, f64)> = None;
    let mut root = None;
    for &w in &grid {
        let Ok(h) = residual(w) else {
            prev = None;
            continue;
        };
        min_res = min_res.min(h.abs());
        if root.is_none() {
            if h == 0.0 {
                root = Some(w);
            } else if let Some((w0, h0)) = prev {
                // a sign change away from the ±π wrap is a genuine crossing
                if h0 * h < 0.0 && h0.abs() < FRAC_PI_2 && h.abs() < FRAC_PI_2 {
                    root = Some(refine(&residual, w0, w, h0)?);
                }
            }
        }
        prev = Some((w, h));
    }

    let mut sol = HarmonicBalanceSolution {
        exists: false,
        omega_bar: None,
        a1: None,
        phase_residual_min: min_res,
        relative_degree: g.relative_degree(),
        search_range: (OMEGA_MIN, OMEGA_MAX),
    };
    if let Some(w) = root {
        let gw = plant_response(g, w)?;
        sol.exists = true;
        sol.omega_bar = Some(w);
        sol.a1 = Some(4.0 / PI * gw.norm() * gamma.hypot(c_f));
        sol.phase_residual_min = 0.0;
    }
    Ok(sol)
}

fn refine<R: Fn(f64) -> Result<f64>>(residual: &R, lo: f64, hi: f64, h_lo: f64) -> Result<f64> {
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let tol = 1e-10 * 0.5;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let h = residual(m.exp())?;
        if h == 0.0 {
            return Ok(m.exp());
        }
        if (h > 0.0) == (h_lo > 0.0) {
            a = m;
        } else {
            b = m;
        }
        if b - a < tol {
            break;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatterReport {
    pub exists: bool,
    pub omega_bar: Option<f64>,
    pub a1: Option<f64>,
    pub phase_residual_min: f64,
    pub relative_degree: usize,
    pub sim_omega: Option<f64>,
    pub sim_a1: Option<f64>,
    /// Relative deviations of the simulated frequency and amplitude from
    /// the prediction.
    pub omega_deviation: Option<f64>,
    pub a1_deviation: Option<f64>,
    pub termination: Termination,
    /// Whether the simulation settled into a steady oscillation.
    pub steady_oscillation: bool,
}

/// Predict chattering for the scenario's plant and compare against a
/// simulation of the same scenario.
pub fn predict_chatter_and_validate(scenario: &Scenario) -> Result<ChatterReport> {
    let p = &scenario.plant;
    if p.friction.model != FrictionModel::Discontinuous {
        return Err(Error::Precondition(
            "chatter prediction needs discontinuous friction".into(),
        ));
    }
    let mut g = LinearPlant::second_order(p.k, p.c)?;
    if let Some(lag) = p.actuator_lag {
        g = g.with_actuator_lag(lag)?;
    }
    let hb = solve_harmonic_balance(&g, p.gamma, p.friction.c_f)?;
    let tr = integrate(scenario)?;
    let steady = match detect_limit_cycle(&tr, DEFAULT_REL_TOL) {
        Ok(rep) => rep.detected,
        Err(Error::InsufficientData(_)) => false,
        Err(e) => return Err(e),
    };
    let mut report = ChatterReport {
        exists: hb.exists,
        omega_bar: hb.omega_bar,
        a1: hb.a1,
        phase_residual_min: hb.phase_residual_min,
        relative_degree: hb.relative_degree,
        sim_omega: None,
        sim_a1: None,
        omega_deviation: None,
        a1_deviation: None,
        termination: tr.termination,
        steady_oscillation: steady,
    };
    if !hb.exists {
        return Ok(report);
    }
    if !steady {
        return Err(Error::Inconclusive(format!(
            "no steady oscillation within t_end = {} (termination {})",
            scenario.t_end,
            tr.termination.name()
        )));
    }
    let spectrum = oscillation_spectrum(&tr)?;
    let (w, a) = (hb.omega_bar.unwrap_or(f64::NAN), hb.a1.unwrap_or(f64::NAN));
    report.sim_omega = Some(spectrum.omega);
    report.sim_a1 = Some(spectrum.amplitude);
    report.omega_deviation = Some((spectrum.omega - w).abs() / w);
    report.a1_deviation = Some((spectrum.amplitude - a).abs() / a);
    Ok(report)
}
