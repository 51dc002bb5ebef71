//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relay_friction::analysis::{
    cycle_energy_balance, detect_limit_cycle, hysteresis_loop_energy, steady_state_error,
    DEFAULT_REL_TOL,
};
use relay_friction::cli::{self, presets};
use relay_friction::friction::{coulomb_force, presliding_branch, presliding_force};
use relay_friction::harmonic::{predict_chatter_and_validate, solve_harmonic_balance, LinearPlant};
use relay_friction::lyapunov::{
    axis_start_bound, convergence_time_bound, default_exclusion_band, twisting_bounds, v_twisting,
    verify_decrease,
};
use relay_friction::tuning::{bound_curve, empirical_gain_sweep, minimize_bound, Stationarity};
use relay_friction::{
    integrate, Direction, ForceValue, FrictionParams, PlantParams, PreslidingState, Regime,
    Scenario, SystemState, Termination,
};

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn preset_scenario(name: &str) -> Scenario {
    presets::preset(name).unwrap().scenario().unwrap()
}

fn lyapunov_identity() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for ratio in [1.05, 1.119, 1.5, 2.0, 5.0] {
        for c_f in [0.5, 1.0, 50.0] {
            for x1 in [0.1, 1.0, 10.0] {
                let gamma = ratio * c_f;
                let b = twisting_bounds(gamma, c_f, 0.0).unwrap();
                let v = v_twisting(&SystemState::new(x1, 0.0), &b);
                worst = worst.max(rel(axis_start_bound(gamma, c_f, x1), b.r * b.r * v));
                n += 1;
            }
        }
    }
    verdict(
        worst <= 1e-10,
        format!("{n} cases, max relative difference {worst:.2e}"),
    )
}

fn twisting_bound() -> Verdict {
    let c_f = 1.0;
    let (mut held, mut cells, mut violations, mut worst_excess) = (0, 0, 0, 0.0f64);
    for ratio in [1.1, 1.5, 2.0, 3.0, 5.0] {
        for x1 in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let gamma = ratio * c_f;
            let p = PlantParams::new(0.0, 0.0, FrictionParams::discontinuous(c_f).unwrap(), gamma)
                .unwrap();
            let x0 = SystemState::new(x1, 0.0);
            let sc = Scenario::new(p, x0, 200.0)
                .with_dt_max(1e-2)
                .with_convergence_radius(1e-6);
            let tr = integrate(&sc).unwrap();
            let b = twisting_bounds(gamma, c_f, 0.0).unwrap();
            let bound = convergence_time_bound(&x0, &b);
            let t = tr.convergence_time.unwrap_or(f64::INFINITY);
            cells += 1;
            if t <= bound {
                held += 1;
            } else {
                worst_excess = worst_excess.max(t / bound);
            }
            let d = verify_decrease(&tr, &b, default_exclusion_band(&tr)).unwrap();
            violations += d.violations.len();
        }
    }
    verdict(
        held == cells && violations == 0,
        format!(
            "time bound held in {held}/{cells} cells (worst simulated/bound ratio {worst_excess:.3}), \
             {violations} decrease violations"
        ),
    )
}

fn stiction_band() -> Verdict {
    let base = presets::preset("lab-2mm").unwrap();
    let sc = base.scenario().unwrap();
    let half = sc.plant.friction.c_f / sc.plant.k;
    let slack = sc.event_tol;
    let mut worst: f64 = 0.0;
    let mut stuck = 0;
    let starts = [
        (0.0, 0.0),
        (1e-3, 0.0),
        (3e-3, 0.0),
        (4e-3, 0.0),
        (0.0, 0.05),
    ];
    for (pos, vel) in starts {
        let mut cfg = base.clone();
        cfg.initial.position = pos;
        cfg.initial.velocity = vel;
        let tr = integrate(&cfg.scenario().unwrap()).unwrap();
        if tr.termination == Termination::StuckOffOrigin {
            stuck += 1;
        }
        worst = worst.max(tr.last().unwrap().x1.abs());
    }
    let mut tail: f64 = 0.0;
    for name in ["lab-2mm-comp", "lab-4mm-comp", "lab-6mm-comp"] {
        let tr = integrate(&preset_scenario(name)).unwrap();
        tail = tail.max(steady_state_error(&tr, 0.0, 0.2).unwrap().mean_abs_error);
    }
    verdict(
        stuck == starts.len() && worst <= half + slack && tail < 1e-5,
        format!(
            "{stuck}/{} runs stuck off origin, max |x1 - ref| {worst:.6e} m vs C_f/k {half:.6e} m; \
             compensated mean tail error {tail:.3e} m",
            starts.len()
        ),
    )
}

fn limit_cycle() -> Verdict {
    let sc = preset_scenario("fig4-limit-cycle");
    let tr = integrate(&sc).unwrap();
    let lc = detect_limit_cycle(&tr, DEFAULT_REL_TOL).unwrap();
    let bound = 1.0 / sc.plant.friction.s;
    let mismatch = match lc.final_cycle {
        Some(cycle) => cycle_energy_balance(&tr, cycle)
            .unwrap()
            .relative_mismatch(),
        None => f64::INFINITY,
    };
    verdict(
        lc.detected && lc.amplitude < bound && lc.contraction_ratio < 1.0 && mismatch <= 0.02,
        format!(
            "detected {}, amplitude {:.3e} (< {bound}), contraction {:.4}, energy mismatch {:.2e}",
            lc.detected, lc.amplitude, lc.contraction_ratio, mismatch
        ),
    )
}

fn chatter_nonexistence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let base = presets::preset("lab-2mm-comp").unwrap();
    let (mut ok, mut min_margin) = (0, f64::INFINITY);
    let mut failures = Vec::new();
    for _ in 0..20 {
        let c_f: f64 = rng.gen_range(0.5..=2.0);
        let ratio: f64 = rng.gen_range(1.05..3.0);
        let mut cfg = base.clone();
        cfg.friction.c_f = c_f;
        cfg.plant.gamma = ratio * c_f;
        let rep = predict_chatter_and_validate(&cfg.scenario().unwrap()).unwrap();
        let certified = rep.phase_residual_min > 0.5 * c_f.atan2(ratio * c_f);
        min_margin = min_margin.min(rep.phase_residual_min);
        if !rep.exists
            && certified
            && rep.termination == Termination::Converged
            && !rep.steady_oscillation
        {
            ok += 1;
        } else {
            failures.push(format!(
                "(γ={:.3}, C_f={c_f:.3}: {:?})",
                ratio * c_f,
                rep.termination
            ));
        }
    }
    verdict(
        ok == 20,
        format!("{ok}/20 pairs without solution and converged, min phase residual {min_margin:.3} rad {}", failures.join(" ")),
    )
}

fn chatter_with_lag() -> Verdict {
    let sc = preset_scenario("twisting-lag");
    let (gamma, c_f) = (sc.plant.gamma, sc.plant.friction.c_f);
    let t = sc.plant.actuator_lag.unwrap();
    let g = LinearPlant::double_integrator_with_lag(t).unwrap();
    let sol = solve_harmonic_balance(&g, gamma, c_f).unwrap();
    let w = sol.omega_bar.unwrap();
    let w_exact = c_f / (gamma * t);
    let gain = 1.0 / (w * w * (1.0 + (w * t).powi(2)).sqrt());
    let a_formula = 4.0 / PI * gain * gamma.hypot(c_f);
    let a = sol.a1.unwrap();
    let (dw, da) = (rel(w, w_exact), rel(a, a_formula));
    let rep = predict_chatter_and_validate(&sc).unwrap();
    let (sw, sa) = (rep.omega_deviation.unwrap(), rep.a1_deviation.unwrap());
    verdict(
        dw <= 1e-8 && da <= 1e-12 && sw <= 0.25 && sa <= 0.30,
        format!(
            "ω̄ {w:.6} vs {w_exact:.6} (rel {dw:.1e}), a1 rel {da:.1e}; simulated ω {:.4} ({:.1}% off, limit 25%), \
             amplitude {:.3e} vs {a:.3e} ({:.1}% off, limit 30%)",
            rep.sim_omega.unwrap(),
            100.0 * sw,
            rep.sim_a1.unwrap(),
            100.0 * sa
        ),
    )
}

fn gain_tuning() -> Verdict {
    let grid: Vec<f64> = [1.01, 1.02, 1.05]
        .into_iter()
        .chain((1..=20).map(|i| 1.0 + 0.1 * i as f64))
        .collect();
    let one = bound_curve(1.0, 1.0, &grid).unwrap();
    let four = bound_curve(1.0, 4.0, &grid).unwrap();
    let scaling = one
        .bound_values
        .iter()
        .zip(&four.bound_values)
        .map(|(a, b)| (b / a - 2.0).abs())
        .fold(0.0, f64::max);

    let p = PlantParams::new(0.0, 0.0, FrictionParams::discontinuous(1.0).unwrap(), 2.0).unwrap();
    let base = Scenario::new(p, SystemState::new(1.0, 0.0), 500.0).with_dt_max(1e-2);
    let sweep = empirical_gain_sweep(&base, &grid).unwrap();
    let sim = sweep.sim_times.clone().unwrap();
    let t_min = sim.iter().cloned().fold(f64::INFINITY, f64::min);
    let diverging = sim[0] > sim[1] && sim[1] > sim[2] && sim[0] > 2.0 * t_min;
    let arg = sweep.argmin_sim.unwrap();
    let interior = arg > grid[0] && arg < grid[grid.len() - 1];

    let report = minimize_bound(1.0, 1.0, 1.01, 3.0).unwrap();
    let finding = match &report.result {
        Stationarity::Interior { ratio, .. } => format!("interior stationary ratio {ratio:.4}"),
        Stationarity::Monotone {
            trend,
            boundary_ratio,
            ..
        } => {
            format!("bound monotone {trend:?} from {boundary_ratio}")
        }
    };
    verdict(
        scaling <= 1e-12 && diverging && interior && report.literature_ratio == 1.119,
        format!(
            "√ scaling error {scaling:.1e}; simulated T(1.01) {:.2} vs min {t_min:.2} at ratio {arg:.2}; \
             bound: {finding}, T at 1.119 = {:.4} against literature optimum 1.119",
            sim[0], report.value_at_literature_ratio.unwrap_or(f64::NAN)
        ),
    )
}

fn normalized(z: f64, f_r: f64, dir: Direction) -> f64 {
    let ps = PreslidingState {
        z,
        f_r,
        regime: Regime::Presliding,
    };
    let p = FrictionParams::presliding(1.0, 1.0).unwrap();
    match presliding_force(&ps, dir, &p).unwrap() {
        ForceValue::Single(f) => f,
        other => panic!("set-valued presliding force {other:?}"),
    }
}

/// Solve `branch(z) = target` for `z` in `[-1, 0]` by bisection.
fn branch_inverse_negative(target: f64) -> f64 {
    let f0 = |z: f64| {
        if z == 0.0 {
            0.0
        } else {
            z * (1.0 - z.abs().ln())
        }
    };
    let (mut lo, mut hi) = (-1.0, 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f0(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + h * i as f64)).sum();
    h * (0.5 * (f(a) + f(b)) + inner)
}

fn friction_properties() -> Verdict {
    const N: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut odd, mut cont, mut mono, mut clockwise) = (0, 0, 0, 0);
    let dir = |s: f64| {
        if s > 0.0 {
            Direction::Positive
        } else {
            Direction::Negative
        }
    };

    for _ in 0..N {
        let c_f: f64 = rng.gen_range(0.01..100.0);
        let v: f64 = rng.gen_range(-10.0..10.0);
        let p = FrictionParams::discontinuous(c_f).unwrap();
        let a = coulomb_force(v, &p).unwrap();
        let b = coulomb_force(-v, &p).unwrap();
        let z: f64 = rng.gen_range(-1.0..=1.0);
        let f_r: f64 = rng.gen_range(-1.0..=1.0);
        let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let odd_force = normalized(-z, -f_r, dir(-s)) == -normalized(z, f_r, dir(s));
        if v == 0.0
            || a.single() != b.single().map(|x| -x)
            || presliding_branch(-z).unwrap() != -presliding_branch(z).unwrap()
            || !odd_force
        {
            odd += 1;
        }
    }
    for _ in 0..N {
        let f_r: f64 = rng.gen_range(-1.0..=1.0);
        let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let eps: f64 = rng.gen_range(1e-14..1e-10);
        let at_zero = normalized(0.0, f_r, dir(s)) == f_r;
        let near_zero = (normalized(s * eps, f_r, dir(s)) - f_r).abs() <= 1e-8;
        let at_one = (normalized(s, f_r, dir(s)) - s).abs() <= 4.0 * f64::EPSILON;
        let near_one = (normalized(s * (1.0 - eps), f_r, dir(s)) - s).abs() <= 1e-12;
        if !(at_zero && near_zero && at_one && near_one) {
            cont += 1;
        }
    }
    for _ in 0..N {
        let a: f64 = rng.gen_range(-1.0..=1.0);
        let b: f64 = rng.gen_range(-1.0..=1.0);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if lo < hi && presliding_branch(lo).unwrap() >= presliding_branch(hi).unwrap() {
            mono += 1;
        }
    }
    for _ in 0..N {
        // Forward from memory f_a by Δz, reverse, and return until the
        // friction is back at f_a: a closed presliding cycle.
        let f_a: f64 = rng.gen_range(-0.99..0.99);
        let dz: f64 = rng.gen_range(0.01..=1.0);
        let f_b = normalized(dz, f_a, Direction::Positive);
        let z2 = branch_inverse_negative((f_a - f_b) / (1.0 + f_b));
        let forward = trapezoid(|z| normalized(z, f_a, Direction::Positive), 0.0, dz, 4000);
        let backward = trapezoid(|z| normalized(z, f_b, Direction::Negative), 0.0, z2, 4000);
        let area = forward + backward;
        if area.is_nan() || area <= 0.0 {
            clockwise += 1;
        }
    }
    let tr = integrate(&preset_scenario("fig4-limit-cycle")).unwrap();
    let lc = detect_limit_cycle(&tr, DEFAULT_REL_TOL).unwrap();
    let sim_area = hysteresis_loop_energy(&tr, lc.final_cycle.unwrap()).unwrap();
    verdict(
        odd + cont + mono + clockwise == 0 && sim_area > 0.0,
        format!(
            "violations: oddness {odd}, continuity {cont}, monotonicity {mono}, clockwise {clockwise} \
             ({N} samples each); simulated loop energy {sim_area:.3e}"
        ),
    )
}

fn reproducibility() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    let mut files = 0;
    for name in presets::PRESET_NAMES {
        let outs: Vec<_> = ["a", "b"]
            .iter()
            .map(|r| dir.path().join(name).join(r))
            .collect();
        for out in &outs {
            let code = cli::main_with_args([
                "relay-friction",
                "simulate",
                "--preset",
                name,
                "--out",
                out.to_str().unwrap(),
            ]);
            assert_eq!(code, 0, "{name}");
        }
        for file in ["trajectory.csv", "events.csv", "report.json"] {
            files += 1;
            if fs::read(outs[0].join(file)).unwrap() != fs::read(outs[1].join(file)).unwrap() {
                differing.push(format!("{name}/{file}"));
            }
        }
    }
    verdict(
        differing.is_empty(),
        format!(
            "{} presets, {files} files compared, differing: {differing:?}",
            presets::PRESET_NAMES.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("Lyapunov identity", lyapunov_identity),
        ("twisting convergence bound", twisting_bound),
        ("stiction band", stiction_band),
        ("presliding limit cycle", limit_cycle),
        ("chattering nonexistence", chatter_nonexistence),
        ("chattering with actuator lag", chatter_with_lag),
        ("gain tuning", gain_tuning),
        ("friction model properties", friction_properties),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {} ({name}): {} | {} [{:.2}s]",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
