//! Scenario configuration documents (TOML).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::presets;
use crate::friction::{FrictionModel, FrictionParams};
use crate::integrator::{ConvergenceNorm, Scenario};
use crate::plant::{PlantParams, SystemState};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Position set-point, m. The simulation runs in error coordinates
    /// `x₁ = position - reference`.
    #[serde(default)]
    pub reference: f64,
    pub plant: PlantSection,
    pub friction: FrictionSection,
    #[serde(default)]
    pub initial: InitialSection,
    pub integration: IntegrationSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalSection>,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub outputs: OutputsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub k: f64,
    pub c: f64,
    pub gamma: f64,
    #[serde(default)]
    pub f_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actuator_lag: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrictionSection {
    #[serde(default = "default_model")]
    pub model: FrictionModel,
    pub c_f: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
}

fn default_model() -> FrictionModel {
    FrictionModel::Discontinuous
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub position: f64,
    #[serde(default)]
    pub velocity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSection {
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_max: Option<f64>,
    #[serde(default = "default_event_tol")]
    pub event_tol: f64,
    #[serde(default = "default_radius")]
    pub convergence_radius: f64,
    #[serde(default)]
    pub convergence_norm: ConvergenceNorm,
    #[serde(default = "default_stick_velocity")]
    pub stick_velocity: f64,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default = "default_max_events")]
    pub max_events: usize,
}

fn default_event_tol() -> f64 {
    1e-10
}
fn default_radius() -> f64 {
    1e-6
}
fn default_stick_velocity() -> f64 {
    1e-9
}
fn default_rtol() -> f64 {
    1e-9
}
fn default_atol() -> f64 {
    1e-12
}
fn default_max_events() -> usize {
    1_000_000
}

/// Hardware units. When present, `plant.k`, `plant.c` and `plant.gamma`
/// are voltage-domain gains and `friction.c_f` is a force in N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSection {
    /// Moving mass, kg.
    pub mass: f64,
    /// Motor force constant, N/V.
    pub force_constant: f64,
    /// Largest admissible amplifier voltage, V.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voltage_limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Trailing fraction of the horizon used for the steady-state error.
    #[serde(default = "default_window")]
    pub window_fraction: f64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default)]
    pub sweep: SweepSection,
}

fn default_window() -> f64 {
    0.2
}
fn default_rel_tol() -> f64 {
    crate::analysis::DEFAULT_REL_TOL
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            window_fraction: default_window(),
            rel_tol: default_rel_tol(),
            sweep: SweepSection::default(),
        }
    }
}

/// Ratio grid `lo, lo + step, …, hi` for the gain commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            lo: 1.05,
            hi: 3.0,
            step: 0.05,
        }
    }
}

impl SweepSection {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.lo.is_finite() && self.hi >= self.lo) {
            return Err(Error::Config(format!(
                "analysis.sweep: need step > 0 and hi >= lo (lo = {}, hi = {}, step = {})",
                self.lo, self.hi, self.step
            )));
        }
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| self.lo + self.step * i as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    #[serde(default = "yes")]
    pub trajectory_csv: bool,
    #[serde(default = "yes")]
    pub events_csv: bool,
    #[serde(default = "yes")]
    pub report: bool,
    #[serde(default)]
    pub plot: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputsSection {
    fn default() -> Self {
        Self {
            trajectory_csv: true,
            events_csv: true,
            report: true,
            plot: false,
        }
    }
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

/// Parse a configuration document. A `preset` key (or `preset_override`)
/// selects a registered template onto which the document is layered.
pub fn parse_config_with(text: &str, preset_override: Option<&str>) -> Result<ScenarioConfig> {
    let mut doc: toml::Value = toml::from_str(text).map_err(config_err)?;
    let table = doc
        .as_table_mut()
        .ok_or_else(|| Error::Config("configuration must be a table".into()))?;
    if let Some(name) = preset_override {
        table.insert("preset".into(), toml::Value::String(name.to_string()));
    }
    let preset_name = match table.get("preset") {
        None => None,
        Some(toml::Value::String(s)) => Some(s.clone()),
        Some(other) => {
            return Err(Error::Config(format!(
                "preset: expected a string, got {other}"
            )))
        }
    };
    let merged = match &preset_name {
        None => doc,
        Some(name) => {
            let base = presets::preset(name).ok_or_else(|| {
                Error::Config(format!(
                    "preset: unknown preset `{name}` (available: {})",
                    presets::PRESET_NAMES.join(", ")
                ))
            })?;
            let mut merged = toml::Value::try_from(&base).map_err(config_err)?;
            merge(&mut merged, doc);
            merged
        }
    };
    let cfg: ScenarioConfig = merged.try_into().map_err(config_err)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    parse_config_with(text, None)
}

pub fn load_config(path: &Path, preset_override: Option<&str>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_with(&text, preset_override)
}

impl ScenarioConfig {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(config_err)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(ph) = &self.physical {
            if !(ph.mass > 0.0 && ph.mass.is_finite()) {
                return Err(Error::Config(format!(
                    "physical.mass must be positive, got {}",
                    ph.mass
                )));
            }
            if !(ph.force_constant > 0.0 && ph.force_constant.is_finite()) {
                return Err(Error::Config(format!(
                    "physical.force_constant must be positive, got {}",
                    ph.force_constant
                )));
            }
            if let Some(v) = ph.voltage_limit {
                if !(v > 0.0) {
                    return Err(Error::Config(format!(
                        "physical.voltage_limit must be positive, got {v}"
                    )));
                }
                if self.plant.gamma > v {
                    return Err(Error::Config(format!(
                        "plant.gamma = {} V exceeds physical.voltage_limit = {v} V",
                        self.plant.gamma
                    )));
                }
            }
        }
        if self.friction.model == FrictionModel::Presliding && self.friction.s.is_none() {
            return Err(Error::Config(
                "friction.s is required for the presliding model".into(),
            ));
        }
        if !(self.analysis.window_fraction > 0.0 && self.analysis.window_fraction < 1.0) {
            return Err(Error::Config(
                "analysis.window_fraction must lie in (0, 1)".into(),
            ));
        }
        if !(self.analysis.rel_tol > 0.0) {
            return Err(Error::Config("analysis.rel_tol must be positive".into()));
        }
        self.scenario().map_err(|e| match e {
            Error::Input(m) | Error::Domain(m) => Error::Config(m),
            other => other,
        })?;
        Ok(())
    }

    /// Plant parameters in normalized (unit-mass) units.
    pub fn plant_params(&self) -> Result<PlantParams> {
        let (gain, force) = match &self.physical {
            Some(ph) => (ph.force_constant / ph.mass, 1.0 / ph.mass),
            None => (1.0, 1.0),
        };
        let c_f = self.friction.c_f * force;
        let friction = match self.friction.model {
            FrictionModel::Discontinuous => FrictionParams::discontinuous(c_f)?,
            FrictionModel::Presliding => {
                FrictionParams::presliding(c_f, self.friction.s.unwrap_or(f64::NAN))?
            }
        };
        let mut p = PlantParams::new(
            self.plant.k * gain,
            self.plant.c * gain,
            friction,
            self.plant.gamma * gain,
        )?;
        p.f_bound = self.plant.f_bound * force;
        p.validate()?;
        match self.plant.actuator_lag {
            Some(t) => p.with_actuator_lag(t),
            None => Ok(p),
        }
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let p = self.plant_params()?;
        let x0 = SystemState::new(
            self.initial.position - self.reference,
            self.initial.velocity,
        );
        let i = &self.integration;
        let mut sc = Scenario::new(p, x0, i.t_end);
        if let Some(dt) = i.dt_max {
            sc.dt_max = dt;
        }
        sc.event_tol = i.event_tol;
        sc.convergence_radius = i.convergence_radius;
        sc.convergence_norm = i.convergence_norm;
        sc.stick_velocity = i.stick_velocity;
        sc.rtol = i.rtol;
        sc.atol = i.atol;
        sc.max_events = i.max_events;
        sc.validate()?;
        Ok(sc)
    }
}
