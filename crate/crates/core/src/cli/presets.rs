//! Built-in scenario templates.

use super::config::{
    AnalysisSection, FrictionSection, InitialSection, IntegrationSection, OutputsSection,
    PlantSection, ScenarioConfig,
};
use crate::friction::FrictionModel;
use crate::integrator::ConvergenceNorm;

pub const PRESET_NAMES: &[&str] = &[
    "lab-2mm",
    "lab-4mm",
    "lab-6mm",
    "lab-2mm-comp",
    "lab-4mm-comp",
    "lab-6mm-comp",
    "fig4-limit-cycle",
    "twisting-baseline",
    "twisting-lag",
];

/// Voice-coil stage: stiffness and damping feedback, Coulomb friction.
pub const LAB_K: f64 = 5600.0;
pub const LAB_C: f64 = 150.0;
pub const LAB_C_F: f64 = 1.148;
pub const LAB_GAMMA: f64 = 1.214;

fn integration(t_end: f64, dt_max: f64, radius: f64) -> IntegrationSection {
    IntegrationSection {
        t_end,
        dt_max: Some(dt_max),
        event_tol: 1e-10,
        convergence_radius: radius,
        convergence_norm: ConvergenceNorm::Euclidean,
        stick_velocity: 1e-9,
        rtol: 1e-9,
        atol: 1e-12,
        max_events: 1_000_000,
    }
}

fn base(
    name: &str,
    plant: PlantSection,
    friction: FrictionSection,
    position: f64,
    integ: IntegrationSection,
) -> ScenarioConfig {
    ScenarioConfig {
        preset: Some(name.to_string()),
        reference: 0.0,
        plant,
        friction,
        initial: InitialSection {
            position,
            velocity: 0.0,
        },
        integration: integ,
        physical: None,
        analysis: AnalysisSection::default(),
        outputs: OutputsSection::default(),
    }
}

fn lab(name: &str, reference_mm: f64, gamma: f64) -> ScenarioConfig {
    let mut cfg = base(
        name,
        PlantSection {
            k: LAB_K,
            c: LAB_C,
            gamma,
            f_bound: 0.0,
            actuator_lag: None,
        },
        FrictionSection {
            model: FrictionModel::Discontinuous,
            c_f: LAB_C_F,
            s: None,
        },
        0.0,
        integration(1.0, 1e-4, 1e-6),
    );
    cfg.reference = reference_mm * 1e-3;
    cfg
}

fn twisting(name: &str, lag: Option<f64>) -> ScenarioConfig {
    let radius = if lag.is_some() { 0.0 } else { 1e-6 };
    let t_end = if lag.is_some() { 20.0 } else { 10.0 };
    base(
        name,
        PlantSection {
            k: 0.0,
            c: 0.0,
            gamma: 1.5,
            f_bound: 0.0,
            actuator_lag: lag,
        },
        FrictionSection {
            model: FrictionModel::Discontinuous,
            c_f: 1.0,
            s: None,
        },
        if lag.is_some() { 0.1 } else { 1.0 },
        integration(t_end, 1e-3, radius),
    )
}

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    Some(match name {
        "lab-2mm" => lab(name, 2.0, 0.0),
        "lab-4mm" => lab(name, 4.0, 0.0),
        "lab-6mm" => lab(name, 6.0, 0.0),
        "lab-2mm-comp" => lab(name, 2.0, LAB_GAMMA),
        "lab-4mm-comp" => lab(name, 4.0, LAB_GAMMA),
        "lab-6mm-comp" => lab(name, 6.0, LAB_GAMMA),
        "fig4-limit-cycle" => base(
            name,
            PlantSection {
                k: 0.0,
                c: 0.0,
                gamma: 60.0,
                f_bound: 0.0,
                actuator_lag: None,
            },
            FrictionSection {
                model: FrictionModel::Presliding,
                c_f: 50.0,
                s: Some(500.0),
            },
            0.01,
            integration(2.0, 1e-4, 0.0),
        ),
        "twisting-baseline" => twisting(name, None),
        "twisting-lag" => twisting(name, Some(0.05)),
        _ => return None,
    })
}
