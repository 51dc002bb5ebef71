use std::fs;
use std::path::Path;

use relay_friction::cli::{self, parse_config, presets};
use serde_json::Value;

fn run(args: &[&str], out: &Path) -> i32 {
    let mut argv = vec!["relay-friction"];
    argv.extend_from_slice(args);
    let out = out.to_str().unwrap().to_string();
    argv.push("--out");
    argv.push(&out);
    cli::main_with_args(argv)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn config_file(dir: &Path, text: &str) -> String {
    let p = dir.join("scenario.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn simulate_twisting_baseline_converges() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&["simulate", "--preset", "twisting-baseline"], dir.path()),
        0
    );
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["trajectory"]["termination"], "Converged");
    assert!(
        report["lyapunov"]["convergence_time_bound"]
            .as_f64()
            .unwrap()
            > 0.0
    );

    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,x1,x2,u,f,z,regime,motion\n"));
    let events = fs::read_to_string(dir.path().join("events.csv")).unwrap();
    assert!(events.lines().skip(1).any(|l| l.contains(",relay_switch,")));
    assert!(!dir.path().join("error.json").exists());
}

#[test]
fn limit_cycle_on_presliding_preset() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&["limit-cycle", "--preset", "fig4-limit-cycle"], dir.path()),
        0
    );
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["limit_cycle"]["detected"], true);
    assert!(report["limit_cycle"]["amplitude"].as_f64().unwrap() < 0.002);
    assert!(
        report["energy_balance"]["relative_mismatch"]
            .as_f64()
            .unwrap()
            < 0.02
    );
}

#[test]
fn harmonic_balance_without_lag_finds_nothing() {
    for preset in ["lab-2mm", "lab-2mm-comp"] {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(
            run(&["harmonic-balance", "--preset", preset], dir.path()),
            0,
            "{preset}"
        );
        let report = json(&dir.path().join("report.json"));
        assert_eq!(report["chatter"]["exists"], false, "{preset}");
    }
}

#[test]
fn gain_commands_write_sweep_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(
        dir.path(),
        "preset = \"twisting-baseline\"\n[analysis.sweep]\nlo = 1.1\nhi = 2.0\nstep = 0.3\n",
    );
    let out = dir.path().join("sweep");
    assert_eq!(run(&["sweep-gain", "--config", &cfg], &out), 0);
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("ratio,bound_T,sim_T,converged"));
    assert_eq!(table.lines().count(), 5);

    let out = dir.path().join("optimal");
    assert_eq!(run(&["optimal-gain", "--config", &cfg], &out), 0);
    let report = json(&out.join("report.json"));
    assert_eq!(report["minimize"]["literature_ratio"], 1.119);
    assert_eq!(report["minimize"]["result"]["outcome"], "monotone");
}

#[test]
fn plot_flag_writes_svg_files() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(
            &["simulate", "--preset", "twisting-baseline", "--plot"],
            dir.path()
        ),
        0
    );
    for name in [
        "timeseries.svg",
        "phase_plane.svg",
        "friction_displacement.svg",
    ] {
        let svg = fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(svg.starts_with("<svg"), "{name}");
    }
}

#[test]
fn output_toggles_are_honored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(
        dir.path(),
        "preset = \"twisting-baseline\"\n[outputs]\ntrajectory_csv = false\nevents_csv = false\n",
    );
    let out = dir.path().join("out");
    assert_eq!(run(&["simulate", "--config", &cfg], &out), 0);
    assert!(out.join("report.json").exists());
    assert!(!out.join("trajectory.csv").exists());
    assert!(!out.join("events.csv").exists());
}

fn expect_failure(args: &[&str], config: Option<&str>, code: i32, kind: &str) {
    let dir = tempfile::tempdir().unwrap();
    let mut argv: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    if let Some(text) = config {
        argv.push("--config".into());
        argv.push(config_file(dir.path(), text));
    }
    let out = dir.path().join("out");
    let refs: Vec<&str> = argv.iter().map(String::as_str).collect();
    assert_eq!(run(&refs, &out), code, "{args:?} {config:?}");
    let err = json(&out.join("error.json"));
    assert_eq!(err["exit_code"], code);
    assert_eq!(err["kind"], kind, "{err}");
}

#[test]
fn configuration_errors_exit_one() {
    expect_failure(&["simulate"], Some(""), 1, "config");
    expect_failure(&["simulate"], Some("preset = \"lab-9mm\""), 1, "config");
    expect_failure(
        &["simulate"],
        Some("preset = \"lab-2mm\"\n[plant]\nstiffness = 3.0\n"),
        1,
        "config",
    );
    expect_failure(
        &["simulate"],
        Some("preset = \"lab-2mm\"\n[friction]\nc_f = -1.0\n"),
        1,
        "config",
    );
    expect_failure(
        &["simulate"],
        Some("preset = \"lab-2mm\"\n[physical]\nmass = 0.0\nforce_constant = 3.28\n"),
        1,
        "config",
    );
    expect_failure(&["simulate"], Some("this is = = not toml"), 1, "config");
    expect_failure(&["simulate"], None, 1, "config");
    // Precondition: the gain sweep needs a double integrator.
    expect_failure(
        &["sweep-gain", "--preset", "lab-2mm-comp"],
        None,
        1,
        "precondition",
    );
}

#[test]
fn missing_config_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let out = dir.path().join("out");
    assert_eq!(
        run(&["simulate", "--config", missing.to_str().unwrap()], &out),
        1
    );
}

#[test]
fn numerical_failures_exit_two() {
    // No grid point reaches the origin before t_end.
    expect_failure(
        &["sweep-gain"],
        Some("preset = \"twisting-baseline\"\n[integration]\nt_end = 0.01\n"),
        2,
        "sweep_failed",
    );
    // The event budget runs out long before the horizon.
    expect_failure(
        &["simulate"],
        Some("preset = \"fig4-limit-cycle\"\n[integration]\nmax_events = 10\n"),
        2,
        "integration",
    );
}

#[test]
fn inconclusive_analyses_exit_three() {
    // Chatter is predicted but the run is too short to settle.
    expect_failure(
        &["harmonic-balance"],
        Some("preset = \"twisting-lag\"\n[integration]\nt_end = 0.5\n"),
        3,
        "inconclusive",
    );
    // A run that sticks immediately has no reversals to analyze.
    expect_failure(
        &["limit-cycle"],
        Some("preset = \"lab-2mm\"\n[initial]\nposition = 0.0019\n"),
        3,
        "insufficient_data",
    );
}

#[test]
fn unwritable_output_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    assert_eq!(
        run(
            &["simulate", "--preset", "twisting-baseline"],
            &blocker.join("sub")
        ),
        2
    );
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(cli::main_with_args(["relay-friction"]), 1);
    assert_eq!(
        cli::main_with_args(["relay-friction", "fly", "--preset", "lab-2mm"]),
        1
    );
    assert_eq!(cli::main_with_args(["relay-friction", "--help"]), 0);
    assert_eq!(cli::main_with_args(["relay-friction", "--version"]), 0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(run(&["simulate", "--preset", "twisting-lag"], out), 0);
    }
    for name in ["trajectory.csv", "events.csv", "report.json"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn presets_round_trip_through_text() {
    for name in presets::PRESET_NAMES {
        let cfg = presets::preset(name).unwrap();
        let text = cfg.to_toml().unwrap();
        assert_eq!(parse_config(&text).unwrap(), cfg, "{name}");
    }
}

#[test]
fn config_file_overrides_preset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(dir.path(), "[initial]\nposition = 0.5\n");
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    let code = cli::main_with_args([
        "relay-friction",
        "simulate",
        "--config",
        &cfg,
        "--preset",
        "twisting-baseline",
        "--out",
        out_s,
    ]);
    assert_eq!(code, 0);
    let report = json(&out.join("report.json"));
    assert_eq!(report["initial_state"]["x1"], 0.5);
    assert_eq!(report["preset"], "twisting-baseline");
}
