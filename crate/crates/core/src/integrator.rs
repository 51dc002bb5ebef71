//! Hybrid integration of the closed loop.
//!
//! Between discrete events the vector field is smooth: the relay sign, the
//! friction direction, the presliding memory and the stick/slip mode are
//! frozen. Each smooth arc is integrated with an embedded Dormand–Prince
//! 5(4) pair whose step is capped at `dt_max`; guard functions are checked
//! on the continuous extension of every accepted step and the earliest
//! crossing is localized by bisection to `event_tol`. The discrete state is
//! then reset and integration restarts from the event.

use serde::{Deserialize, Serialize};

use crate::friction::{branch, normalized_branch_force, Direction, FrictionModel, Regime};
use crate::plant::{Motion, PlantParams, SystemState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvergenceNorm {
    /// `‖(x₁, x₂)‖`
    #[default]
    Euclidean,
    /// `‖(√k·x₁, x₂)‖`
    Energy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub plant: PlantParams,
    pub x0: SystemState,
    pub t_end: f64,
    /// Upper bound on the step size, s.
    pub dt_max: f64,
    /// Time localization tolerance of events, s.
    pub event_tol: f64,
    /// Radius of the ball around the origin that counts as converged;
    /// zero disables the check.
    pub convergence_radius: f64,
    pub convergence_norm: ConvergenceNorm,
    /// Speed below which a sliding mass with the net force inside the
    /// friction capacity is declared stuck. Zero sticks only at exact
    /// velocity zeros.
    pub stick_velocity: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_events: usize,
}

impl Scenario {
    pub fn new(plant: PlantParams, x0: SystemState, t_end: f64) -> Self {
        Self {
            plant,
            x0,
            t_end,
            dt_max: 1e-3_f64.min(t_end / 10.0),
            event_tol: 1e-10,
            convergence_radius: 1e-6,
            convergence_norm: ConvergenceNorm::Euclidean,
            stick_velocity: 1e-9,
            rtol: 1e-9,
            atol: 1e-12,
            max_events: 1_000_000,
        }
    }

    pub fn with_dt_max(mut self, dt_max: f64) -> Self {
        self.dt_max = dt_max;
        self
    }

    pub fn with_event_tol(mut self, tol: f64) -> Self {
        self.event_tol = tol;
        self
    }

    pub fn with_stick_velocity(mut self, v: f64) -> Self {
        self.stick_velocity = v;
        self
    }

    pub fn with_convergence_radius(mut self, radius: f64) -> Self {
        self.convergence_radius = radius;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        if !self.x0.is_finite() {
            return Err(Error::Input("initial state must be finite".into()));
        }
        let ok = self.event_tol > 0.0
            && self.event_tol < self.dt_max
            && self.dt_max <= self.t_end
            && self.t_end.is_finite();
        if !ok {
            return Err(Error::Input(format!(
                "require 0 < event_tol ({}) < dt_max ({}) <= t_end ({})",
                self.event_tol, self.dt_max, self.t_end
            )));
        }
        if !(self.convergence_radius >= 0.0) {
            return Err(Error::Input("convergence_radius must be >= 0".into()));
        }
        if !(self.stick_velocity >= 0.0 && self.stick_velocity.is_finite()) {
            return Err(Error::Input(
                "stick_velocity must be finite and >= 0".into(),
            ));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::Input("rtol and atol must be positive".into()));
        }
        if self.plant.friction.model == FrictionModel::Presliding {
            let ps = &self.x0.presliding;
            if !(ps.f_r.abs() <= 1.0 && ps.z.abs() <= 1.0) {
                return Err(Error::Input("initial presliding state out of range".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    /// Control acting on the plant.
    pub u: f64,
    /// Friction reaction `f` (positive along the motion).
    pub f: f64,
    pub z: f64,
    pub regime: Regime,
    pub motion: Motion,
    /// Cumulative control work `∫u·x₂ dt`.
    pub work_u: f64,
    /// Cumulative friction work `∫f·x₂ dt`.
    pub work_f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    RelaySwitch,
    VelocityReversal,
    StickEntry,
    StickExit,
    PreslidingToSliding,
    SlidingToPresliding,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::RelaySwitch => "relay_switch",
            EventKind::VelocityReversal => "velocity_reversal",
            EventKind::StickEntry => "stick_entry",
            EventKind::StickExit => "stick_exit",
            EventKind::PreslidingToSliding => "presliding_to_sliding",
            EventKind::SlidingToPresliding => "sliding_to_presliding",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridEvent {
    pub t: f64,
    pub kind: EventKind,
    pub state_before: SystemState,
    pub state_after: SystemState,
    /// Friction reaction just before and just after the event.
    pub friction_before: f64,
    pub friction_after: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    TimeUp,
    Converged,
    StuckOffOrigin,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::TimeUp => "TimeUp",
            Termination::Converged => "Converged",
            Termination::StuckOffOrigin => "StuckOffOrigin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub plant: PlantParams,
    pub samples: Vec<Sample>,
    pub events: Vec<HybridEvent>,
    pub termination: Termination,
    /// Scenario end time. Past the last sample the terminal state holds.
    pub horizon: f64,
    pub convergence_time: Option<f64>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Linear interpolation of a sample column at time `t`, holding the
    /// terminal value past the end.
    pub fn interpolate(&self, t: f64, column: impl Fn(&Sample) -> f64) -> Option<f64> {
        let s = &self.samples;
        let first = s.first()?;
        if t <= first.t {
            return Some(column(first));
        }
        let last = s.last()?;
        if t >= last.t {
            return Some(column(last));
        }
        let i = s.partition_point(|p| p.t <= t);
        let (a, b) = (&s[i - 1], &s[i]);
        let w = (t - a.t) / (b.t - a.t);
        Some(column(a) + w * (column(b) - column(a)))
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &HybridEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

// ---------------------------------------------------------------------------
// Event localization
// ---------------------------------------------------------------------------

/// Locate the sign change of `guard` inside `[lo, hi]` to within `tol`.
///
/// Returns the end of the final bracket that lies on the `hi` side of the
/// crossing.
pub fn locate_event<G: FnMut(f64) -> f64>(mut guard: G, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let g_lo = guard(lo);
    let g_hi = guard(hi);
    if !(g_lo.is_finite() && g_hi.is_finite()) || g_lo.signum() == g_hi.signum() || g_lo == 0.0 {
        if g_hi == 0.0 && g_lo != 0.0 {
            return Ok(hi);
        }
        if g_lo == 0.0 {
            return Ok(lo);
        }
        return Err(Error::Bracket { lo, hi });
    }
    let positive_lo = g_lo > 0.0;
    Ok(bisect(|t| (guard(t) > 0.0) != positive_lo, lo, hi, tol))
}

/// Bisection for the first time where `crossed` becomes true; `crossed(lo)`
/// is assumed false and `crossed(hi)` true.
fn bisect<P: FnMut(f64) -> bool>(mut crossed: P, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if crossed(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

// ---------------------------------------------------------------------------
// Dormand–Prince 5(4)
// ---------------------------------------------------------------------------

const N: usize = 6;
const X1: usize = 0;
const X2: usize = 1;
const Z: usize = 2;
const UA: usize = 3;
const WU: usize = 4;
const WF: usize = 5;

type Y = [f64; N];

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn lin(y: &Y, terms: &[(f64, &Y)]) -> Y {
    let mut out = *y;
    for i in 0..N {
        out[i] += terms.iter().map(|(c, k)| c * k[i]).sum::<f64>();
    }
    out
}

/// Accepted step with its continuous extension.
struct Step {
    t0: f64,
    h: f64,
    y0: Y,
    y1: Y,
    rcont: [Y; 4],
    k7: Y,
}

impl Step {
    fn eval(&self, t: f64) -> Y {
        let th = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let th1 = 1.0 - th;
        let mut y = [0.0; N];
        for (i, yi) in y.iter_mut().enumerate() {
            let [r2, r3, r4, r5] = [
                self.rcont[0][i],
                self.rcont[1][i],
                self.rcont[2][i],
                self.rcont[3][i],
            ];
            *yi = self.y0[i] + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
        }
        y
    }

    fn t1(&self) -> f64 {
        self.t0 + self.h
    }
}

// ---------------------------------------------------------------------------
// Hybrid simulation
// ---------------------------------------------------------------------------

/// Discrete part of the hybrid state.
#[derive(Debug, Clone, Copy)]
struct Mode {
    relay: f64,
    direction: Direction,
    f_r: f64,
    regime: Regime,
    motion: Motion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Guard {
    // order = priority for simultaneous events
    Converge,
    Creep,
    Velocity,
    Relay,
    Regime,
    Unstick,
}

enum Outcome {
    Continue,
    Terminate(Termination),
}

struct Sim<'a> {
    sc: &'a Scenario,
    p: PlantParams,
    t: f64,
    y: Y,
    mode: Mode,
    samples: Vec<Sample>,
    events: Vec<HybridEvent>,
    fast_events: usize,
    // work done before the current arc; the state carries only the arc's share
    work_base: [f64; 2],
}

impl<'a> Sim<'a> {
    fn presliding(&self) -> bool {
        self.p.friction.model == FrictionModel::Presliding
    }

    fn control(&self, y: &Y, mode: &Mode) -> f64 {
        match self.p.actuator_lag {
            Some(_) => y[UA],
            None => -self.p.gamma * mode.relay,
        }
    }

    /// Friction reaction while moving.
    fn moving_friction(&self, y: &Y, mode: &Mode) -> f64 {
        let c_f = self.p.friction.c_f;
        let d = mode.direction;
        if self.presliding() && mode.regime == Regime::Presliding {
            c_f * normalized_branch_force(mode.f_r, d, branch(y[Z]))
        } else {
            c_f * d.sign()
        }
    }

    fn friction(&self, y: &Y, mode: &Mode) -> f64 {
        match mode.motion {
            Motion::Moving => self.moving_friction(y, mode),
            // Clamped: a run can end inside the convergence ball at a
            // rest state the friction could not actually hold.
            Motion::Stuck => {
                let cap = self.p.friction.c_f;
                self.p
                    .rest_force(y[X1], self.control(y, mode))
                    .clamp(-cap, cap)
            }
        }
    }

    fn rhs(&self, y: &Y, mode: &Mode) -> Y {
        let mut dy = [0.0; N];
        if let Some(lag) = self.p.actuator_lag {
            dy[UA] = (-self.p.gamma * mode.relay - y[UA]) / lag;
        }
        if mode.motion == Motion::Stuck {
            return dy;
        }
        let u = self.control(y, mode);
        let f = self.moving_friction(y, mode);
        dy[X1] = y[X2];
        dy[X2] = -self.p.k * y[X1] - self.p.c * y[X2] - f + u;
        if self.presliding() && mode.regime == Regime::Presliding {
            dy[Z] = self.p.friction.s * y[X2];
        }
        dy[WU] = u * y[X2];
        dy[WF] = f * y[X2];
        dy
    }

    fn norm(&self, y: &Y) -> f64 {
        match self.sc.convergence_norm {
            ConvergenceNorm::Euclidean => y[X1].hypot(y[X2]),
            ConvergenceNorm::Energy => (self.p.k.sqrt() * y[X1]).hypot(y[X2]),
        }
    }

    fn guards(&self, mode: &Mode) -> Vec<Guard> {
        let mut g = Vec::with_capacity(4);
        match mode.motion {
            Motion::Moving => {
                if self.sc.convergence_radius > 0.0 {
                    g.push(Guard::Converge);
                }
                if self.sc.stick_velocity > 0.0 && !self.presliding() {
                    g.push(Guard::Creep);
                }
                g.push(Guard::Velocity);
                g.push(Guard::Relay);
                if self.presliding() && mode.regime == Regime::Presliding {
                    g.push(Guard::Regime);
                }
            }
            Motion::Stuck => {
                if self.p.actuator_lag.is_some() {
                    g.push(Guard::Unstick);
                }
            }
        }
        g
    }

    /// Whether the guard has fired at state `y`.
    fn crossed(&self, guard: Guard, y: &Y, mode: &Mode) -> bool {
        match guard {
            Guard::Converge => self.norm(y) <= self.sc.convergence_radius,
            Guard::Creep => {
                let u = self.control(y, mode);
                y[X2].abs() <= self.sc.stick_velocity
                    && (self.p.rest_force(y[X1], u) - self.p.c * y[X2]).abs() <= self.p.friction.c_f
            }
            Guard::Velocity => mode.direction.sign() * y[X2] < 0.0,
            Guard::Relay => mode.relay * y[X1] < 0.0,
            Guard::Regime => mode.direction.sign() * y[Z] > 1.0,
            Guard::Unstick => {
                self.p.rest_force(y[X1], self.control(y, mode)).abs() > self.stick_capacity()
            }
        }
    }

    fn stick_capacity(&self) -> f64 {
        match self.p.friction.model {
            FrictionModel::Discontinuous => self.p.friction.c_f,
            FrictionModel::Presliding => 0.0,
        }
    }

    fn state(&self, y: &Y, mode: &Mode) -> SystemState {
        SystemState {
            x1: y[X1],
            x2: y[X2],
            presliding: crate::friction::PreslidingState {
                z: y[Z],
                f_r: mode.f_r,
                regime: mode.regime,
            },
            motion: mode.motion,
            actuator: self.p.actuator_lag.map(|_| y[UA]),
        }
    }

    fn record(&mut self) {
        let s = Sample {
            t: self.t,
            x1: self.y[X1],
            x2: self.y[X2],
            u: self.control(&self.y, &self.mode),
            f: self.friction(&self.y, &self.mode),
            z: self.y[Z],
            regime: self.mode.regime,
            motion: self.mode.motion,
            work_u: self.work_base[0] + self.y[WU],
            work_f: self.work_base[1] + self.y[WF],
        };
        match self.samples.last_mut() {
            Some(last) if last.t >= s.t => *last = s,
            _ => self.samples.push(s),
        }
    }

    fn push_event(&mut self, kind: EventKind, before: (Y, Mode), f_before: f64) {
        let (yb, mb) = before;
        let ev = HybridEvent {
            t: self.t,
            kind,
            state_before: self.state(&yb, &mb),
            state_after: self.state(&self.y, &self.mode),
            friction_before: f_before,
            friction_after: self.friction(&self.y, &self.mode),
        };
        self.events.push(ev);
    }

    fn check_cascade(&mut self) -> Result<()> {
        let n = self.events.len();
        if n > self.sc.max_events {
            return Err(Error::Integration {
                t: self.t,
                reason: format!("more than {} events", self.sc.max_events),
            });
        }
        if n >= 2 && self.events[n - 1].t - self.events[n - 2].t <= self.sc.event_tol {
            self.fast_events += 1;
        } else {
            self.fast_events = 0;
        }
        if self.fast_events > 200 {
            let ev = &self.events[n - 1];
            return Err(Error::Integration {
                t: self.t,
                reason: format!(
                    "event cascade: {} consecutive events closer than event_tol, last {:?} at x = ({:e}, {:e})",
                    self.fast_events, ev.kind, ev.state_after.x1, ev.state_after.x2
                ),
            });
        }
        Ok(())
    }

    fn at_origin(&self) -> bool {
        self.norm(&self.y) <= self.sc.convergence_radius
    }

    /// Resolve the motion at a state with `x₂ = 0`: stick, or move off in
    /// the direction of the net force.
    fn resolve_rest(&mut self) -> Outcome {
        self.y[X2] = 0.0;
        if self.at_origin() || (self.y[X1] == 0.0 && self.p.actuator_lag.is_none()) {
            self.mode.motion = Motion::Stuck;
            return Outcome::Terminate(Termination::Converged);
        }
        let u = self.control(&self.y, &self.mode);
        let mut a = self.p.rest_force(self.y[X1], u);
        if self.presliding() {
            a -= self.p.friction.c_f * self.mode.f_r;
        }
        let capacity = self.stick_capacity();
        let sticks = if self.presliding() {
            a == 0.0
        } else {
            a.abs() <= capacity
        };
        if sticks {
            self.mode.motion = Motion::Stuck;
            if self.p.actuator_lag.is_none() {
                return Outcome::Terminate(Termination::StuckOffOrigin);
            }
        } else {
            self.mode.motion = Motion::Moving;
            self.mode.direction = Direction::of(a).expect("nonzero rest force");
        }
        Outcome::Continue
    }

    fn initial_mode(&mut self) -> Outcome {
        let x0 = self.sc.x0;
        let relay = match Direction::of(x0.x1).or_else(|| Direction::of(x0.x2)) {
            Some(d) => d.sign(),
            None => 1.0,
        };
        self.mode = Mode {
            relay,
            direction: Direction::of(x0.x2).unwrap_or(Direction::Positive),
            f_r: x0.presliding.f_r,
            regime: x0.presliding.regime,
            motion: Motion::Moving,
        };
        if !self.presliding() {
            self.mode.regime = Regime::Sliding;
        }
        self.y = [x0.x1, x0.x2, x0.presliding.z, 0.0, 0.0, 0.0];
        if self.p.actuator_lag.is_some() {
            self.y[UA] = x0.actuator.unwrap_or(0.0);
        }
        if !self.presliding() {
            self.y[Z] = 0.0;
        }
        if self.at_origin() {
            return Outcome::Terminate(Termination::Converged);
        }
        if x0.x2 == 0.0 {
            let before = (self.y, self.mode);
            let f_before = 0.0;
            let out = self.resolve_rest();
            if self.mode.motion == Motion::Stuck {
                self.push_event(EventKind::StickEntry, before, f_before);
            }
            return out;
        }
        Outcome::Continue
    }

    fn handle(&mut self, guard: Guard) -> Result<Outcome> {
        self.work_base[0] += self.y[WU];
        self.work_base[1] += self.y[WF];
        self.y[WU] = 0.0;
        self.y[WF] = 0.0;
        let before = (self.y, self.mode);
        let f_before = self.friction(&self.y, &self.mode);
        let out = match guard {
            Guard::Converge => Outcome::Terminate(Termination::Converged),
            Guard::Creep => {
                self.y[X2] = 0.0;
                self.mode.motion = Motion::Stuck;
                self.push_event(EventKind::StickEntry, before, f_before);
                if self.at_origin() {
                    Outcome::Terminate(Termination::Converged)
                } else if self.p.actuator_lag.is_none() {
                    Outcome::Terminate(Termination::StuckOffOrigin)
                } else {
                    Outcome::Continue
                }
            }
            Guard::Relay => {
                self.y[X1] = 0.0;
                if self.y[X2] == 0.0 {
                    return Ok(self.resolve_rest());
                }
                self.mode.relay = -self.mode.relay;
                self.push_event(EventKind::RelaySwitch, before, f_before);
                Outcome::Continue
            }
            Guard::Regime => {
                self.y[Z] = self.mode.direction.sign();
                self.mode.regime = Regime::Sliding;
                self.push_event(EventKind::PreslidingToSliding, before, f_before);
                Outcome::Continue
            }
            Guard::Velocity => {
                let old_direction = self.mode.direction;
                let was_sliding = self.mode.regime == Regime::Sliding;
                if self.presliding() {
                    let f_p = (f_before / self.p.friction.c_f).clamp(-1.0, 1.0);
                    self.mode.f_r = f_p;
                    self.mode.regime = Regime::Presliding;
                    self.y[Z] = 0.0;
                }
                let out = self.resolve_rest();
                if self.mode.motion == Motion::Stuck {
                    self.push_event(EventKind::StickEntry, before, f_before);
                } else if self.mode.direction != old_direction {
                    self.push_event(EventKind::VelocityReversal, before, f_before);
                }
                if self.presliding() && was_sliding {
                    self.push_event(EventKind::SlidingToPresliding, before, f_before);
                }
                out
            }
            Guard::Unstick => {
                let u = self.control(&self.y, &self.mode);
                let mut a = self.p.rest_force(self.y[X1], u);
                if self.presliding() {
                    a -= self.p.friction.c_f * self.mode.f_r;
                }
                self.mode.motion = Motion::Moving;
                self.mode.direction = Direction::of(a).unwrap_or(self.mode.direction);
                self.push_event(EventKind::StickExit, before, f_before);
                Outcome::Continue
            }
        };
        self.check_cascade()?;
        Ok(out)
    }

    fn dopri_step(&self, t0: f64, y0: &Y, k1: &Y, h: f64, mode: &Mode) -> (Step, f64) {
        let f = |y: &Y| self.rhs(y, mode);
        let k2 = f(&lin(y0, &[(h * A21, k1)]));
        let k3 = f(&lin(y0, &[(h * A31, k1), (h * A32, &k2)]));
        let k4 = f(&lin(y0, &[(h * A41, k1), (h * A42, &k2), (h * A43, &k3)]));
        let k5 = f(&lin(
            y0,
            &[
                (h * A51, k1),
                (h * A52, &k2),
                (h * A53, &k3),
                (h * A54, &k4),
            ],
        ));
        let k6 = f(&lin(
            y0,
            &[
                (h * A61, k1),
                (h * A62, &k2),
                (h * A63, &k3),
                (h * A64, &k4),
                (h * A65, &k5),
            ],
        ));
        let y1 = lin(
            y0,
            &[
                (h * A71, k1),
                (h * A73, &k3),
                (h * A74, &k4),
                (h * A75, &k5),
                (h * A76, &k6),
            ],
        );
        let k7 = f(&y1);

        let mut err = 0.0;
        for i in 0..N {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.sc.atol + self.sc.rtol * y0[i].abs().max(y1[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / N as f64).sqrt();

        let mut rcont = [[0.0; N]; 4];
        for i in 0..N {
            let r2 = y1[i] - y0[i];
            let r3 = h * k1[i] - r2;
            let r4 = r2 - h * k7[i] - r3;
            let r5 =
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            rcont[0][i] = r2;
            rcont[1][i] = r3;
            rcont[2][i] = r4;
            rcont[3][i] = r5;
        }
        (
            Step {
                t0,
                h,
                y0: *y0,
                y1,
                rcont,
                k7,
            },
            err,
        )
    }

    /// Earliest guard crossing within an accepted step.
    fn find_event(&self, step: &Step, guards: &[Guard]) -> Option<(f64, Guard)> {
        const PROBES: usize = 8;
        let mode = self.mode;
        let mut lo = step.t0;
        for j in 1..=PROBES {
            let hi = if j == PROBES {
                step.t1()
            } else {
                step.t0 + step.h * j as f64 / PROBES as f64
            };
            let y_hi = if j == PROBES { step.y1 } else { step.eval(hi) };
            let fired: Vec<Guard> = guards
                .iter()
                .copied()
                .filter(|&g| self.crossed(g, &y_hi, &mode))
                .collect();
            if !fired.is_empty() {
                let mut best: Option<(f64, Guard)> = None;
                for g in fired {
                    let te = bisect(
                        |t| self.crossed(g, &step.eval(t), &mode),
                        lo,
                        hi,
                        self.sc.event_tol,
                    );
                    best = match best {
                        Some((tb, gb)) if tb < te - self.sc.event_tol => Some((tb, gb)),
                        Some((tb, gb)) if (tb - te).abs() <= self.sc.event_tol && gb < g => {
                            Some((tb.min(te), gb))
                        }
                        _ => Some((te, g)),
                    };
                }
                return best;
            }
            lo = hi;
        }
        None
    }

    fn run(mut self) -> Result<Trajectory> {
        let mut termination = match self.initial_mode() {
            Outcome::Terminate(t) => Some(t),
            Outcome::Continue => None,
        };
        self.record();

        let mut h = self.sc.dt_max;
        let mut k1 = self.rhs(&self.y, &self.mode);
        let h_min = 1e-14 * self.sc.t_end.max(1.0);

        while termination.is_none() && self.t < self.sc.t_end {
            // frozen stuck state: nothing evolves
            if self.mode.motion == Motion::Stuck && self.p.actuator_lag.is_none() {
                termination = Some(Termination::StuckOffOrigin);
                break;
            }
            let remaining = self.sc.t_end - self.t;
            let h_try = h.min(self.sc.dt_max).min(remaining);
            let (step, err) = self.dopri_step(self.t, &self.y, &k1, h_try, &self.mode);
            if !step.y1.iter().all(|v| v.is_finite()) || !err.is_finite() {
                if h_try <= h_min {
                    return Err(Error::Divergence { t: self.t });
                }
                h = h_try * 0.25;
                continue;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err > 1.0 {
                if h_try <= h_min {
                    return Err(Error::Integration {
                        t: self.t,
                        reason: format!(
                            "step size underflow (h = {h_try:e}, error ratio {err:.3})"
                        ),
                    });
                }
                h = h_try * factor.min(0.9);
                continue;
            }

            let guards = self.guards(&self.mode);
            match self.find_event(&step, &guards) {
                Some((te, guard)) => {
                    self.t = te;
                    self.y = step.eval(te);
                    if !self.y.iter().all(|v| v.is_finite()) {
                        return Err(Error::Divergence { t: self.t });
                    }
                    if let Outcome::Terminate(t) = self.handle(guard)? {
                        termination = Some(t);
                    }
                    self.record();
                    k1 = self.rhs(&self.y, &self.mode);
                    h = h_try;
                }
                None => {
                    self.t = if step.h == remaining {
                        self.sc.t_end
                    } else {
                        step.t1()
                    };
                    self.y = step.y1;
                    k1 = step.k7;
                    self.record();
                    h = h_try * factor;
                }
            }
        }

        let termination = termination.unwrap_or(Termination::TimeUp);
        let convergence_time = (termination == Termination::Converged).then_some(self.t);
        Ok(Trajectory {
            plant: self.p,
            samples: self.samples,
            events: self.events,
            termination,
            horizon: self.sc.t_end,
            convergence_time,
        })
    }
}

/// Integrate the hybrid closed loop described by `scenario`.
pub fn integrate(scenario: &Scenario) -> Result<Trajectory> {
    scenario.validate()?;
    let sim = Sim {
        sc: scenario,
        p: scenario.plant,
        t: 0.0,
        y: [0.0; N],
        mode: Mode {
            relay: 1.0,
            direction: Direction::Positive,
            f_r: 0.0,
            regime: Regime::Presliding,
            motion: Motion::Moving,
        },
        samples: Vec::new(),
        events: Vec::new(),
        fast_events: 0,
        work_base: [0.0; 2],
    };
    sim.run()
}
