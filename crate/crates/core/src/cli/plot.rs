//! Minimal SVG line plots of trajectories.

use std::fmt::Write as _;
use std::path::Path;

use crate::integrator::Trajectory;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    TimeSeries,
    PhasePlane,
    FrictionDisplacement,
}

impl PlotKind {
    pub const ALL: [PlotKind; 3] = [
        PlotKind::TimeSeries,
        PlotKind::PhasePlane,
        PlotKind::FrictionDisplacement,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            PlotKind::TimeSeries => "timeseries.svg",
            PlotKind::PhasePlane => "phase_plane.svg",
            PlotKind::FrictionDisplacement => "friction_displacement.svg",
        }
    }
}

const W: f64 = 800.0;
const H: f64 = 360.0;
const ML: f64 = 80.0;
const MR: f64 = 20.0;
const MT: f64 = 30.0;
const MB: f64 = 50.0;
const MAX_POINTS: usize = 4000;
const COLORS: [&str; 2] = ["#1f77b4", "#d62728"];

struct Panel<'a> {
    title: &'a str,
    xlabel: &'a str,
    ylabel: &'a str,
    series: Vec<(&'a str, Vec<(f64, f64)>)>,
    markers: Vec<(f64, f64)>,
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo <= 1e-300_f64.max(1e-12 * hi.abs().max(lo.abs())) {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn thin(points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    if points.len() <= MAX_POINTS {
        return points;
    }
    let stride = points.len().div_ceil(MAX_POINTS);
    let last = *points.last().unwrap_or(&(0.0, 0.0));
    let mut out: Vec<(f64, f64)> = points.into_iter().step_by(stride).collect();
    out.push(last);
    out
}

fn draw_panel(svg: &mut String, p: &Panel, top: f64) {
    let (x0, x1) = range(p.series.iter().flat_map(|s| s.1.iter().map(|q| q.0)));
    let (y0, y1) = range(p.series.iter().flat_map(|s| s.1.iter().map(|q| q.1)));
    let pw = W - ML - MR;
    let ph = H - MT - MB;
    let sx = |x: f64| ML + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + MT + ph - (y - y0) / (y1 - y0) * ph;

    let _ = writeln!(
        svg,
        r#"<rect x="{ML}" y="{:.2}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#,
        top + MT
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
        ML + pw / 2.0,
        top + MT - 10.0,
        p.title
    );
    for t in ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#,
            top + MT + ph,
            top + MT + ph + 5.0,
            top + MT + ph + 18.0,
            fmt_tick(t)
        );
    }
    for t in ticks(y0, y1) {
        let y = sy(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{ML}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#,
            ML - 5.0,
            ML - 8.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(
            svg,
            r##"<line x1="{ML}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
            sy(0.0),
            ML + pw,
            sy(0.0)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
        ML + pw / 2.0,
        top + H - 12.0,
        p.xlabel
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {:.2})">{}</text>"#,
        top + MT + ph / 2.0,
        top + MT + ph / 2.0,
        p.ylabel
    );
    for (i, (name, pts)) in p.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut d = String::new();
        for (x, y) in pts {
            let _ = write!(d, "{:.2},{:.2} ", sx(*x), sy(*y));
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1" points="{}"/>"#,
            d.trim_end()
        );
        if p.series.len() > 1 {
            let ly = top + MT + 15.0 + 15.0 * i as f64;
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{ly:.2}" font-size="11" fill="{color}">{name}</text>"#,
                ML + pw - 60.0
            );
        }
    }
    for (x, y) in &p.markers {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="none" stroke="black"/>"#,
            sx(*x),
            sy(*y)
        );
    }
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e-2 && v.abs() < 1e4 {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

/// Render a trajectory plot as an SVG document.
pub fn render(traj: &Trajectory, kind: PlotKind) -> Result<String> {
    if traj.samples.is_empty() {
        return Err(Error::Precondition(
            "cannot plot an empty trajectory".into(),
        ));
    }
    let s = &traj.samples;
    let events: Vec<_> = traj.events.iter().collect();
    let panels = match kind {
        PlotKind::TimeSeries => vec![
            Panel {
                title: "position error",
                xlabel: "t [s]",
                ylabel: "x1",
                series: vec![("x1", thin(s.iter().map(|p| (p.t, p.x1)).collect()))],
                markers: events.iter().map(|e| (e.t, e.state_after.x1)).collect(),
            },
            Panel {
                title: "velocity",
                xlabel: "t [s]",
                ylabel: "x2",
                series: vec![("x2", thin(s.iter().map(|p| (p.t, p.x2)).collect()))],
                markers: events.iter().map(|e| (e.t, e.state_after.x2)).collect(),
            },
        ],
        PlotKind::PhasePlane => vec![Panel {
            title: "phase plane",
            xlabel: "x1",
            ylabel: "x2",
            series: vec![("trajectory", thin(s.iter().map(|p| (p.x1, p.x2)).collect()))],
            markers: events
                .iter()
                .map(|e| (e.state_after.x1, e.state_after.x2))
                .collect(),
        }],
        PlotKind::FrictionDisplacement => vec![Panel {
            title: "friction versus displacement",
            xlabel: "x1",
            ylabel: "f",
            series: vec![("friction", thin(s.iter().map(|p| (p.x1, p.f)).collect()))],
            markers: events
                .iter()
                .map(|e| (e.state_after.x1, e.friction_after))
                .collect(),
        }],
    };
    let height = H * panels.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" viewBox="0 0 {W} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        draw_panel(&mut svg, p, H * i as f64);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_plot(traj: &Trajectory, kind: PlotKind, path: &Path) -> Result<()> {
    let svg = render(traj, kind)?;
    std::fs::write(path, svg).map_err(Error::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::friction::FrictionParams;
    use crate::integrator::{integrate, Scenario, Termination};
    use crate::plant::{PlantParams, SystemState};

    #[test]
    fn plots_render() {
        let p =
            PlantParams::new(0.0, 0.0, FrictionParams::discontinuous(1.0).unwrap(), 1.5).unwrap();
        let tr = integrate(&Scenario::new(p, SystemState::new(1.0, 0.0), 10.0)).unwrap();
        for kind in PlotKind::ALL {
            let svg = render(&tr, kind).unwrap();
            assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
            assert!(svg.contains("<polyline"));
        }
    }

    #[test]
    fn empty_trajectory_is_rejected() {
        let p =
            PlantParams::new(0.0, 0.0, FrictionParams::discontinuous(1.0).unwrap(), 1.5).unwrap();
        let tr = Trajectory {
            plant: p,
            samples: vec![],
            events: vec![],
            termination: Termination::TimeUp,
            horizon: 1.0,
            convergence_time: None,
        };
        assert!(matches!(
            render(&tr, PlotKind::PhasePlane),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn tick_steps_are_round() {
        assert_eq!(ticks(0.0, 10.0), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(fmt_tick(0.25), "0.25");
    }
}
