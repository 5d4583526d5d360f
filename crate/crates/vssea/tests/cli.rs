//! End-to-end tests of the command-line binary: exit codes, CSV output,
//! report labels, and sweep behavior, all through real process spawns.

use std::path::Path;
use std::process::{Command, Output};

fn vssea(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vssea"))
        .args(args)
        .output()
        .expect("binary must spawn")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("process must exit normally")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout must be UTF-8")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr must be UTF-8")
}

/// Splits a sweep CSV body into its data cells.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn simulate_writes_csv_and_summary_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let result = vssea(&[
        "simulate",
        "--out",
        out.to_str().unwrap(),
        "--set",
        "sim.duration=1",
    ]);
    assert_eq!(code(&result), 0, "stderr: {}", stderr(&result));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with(
        "t,ref,theta_l,dtheta_l,theta_e,dtheta_e,u,dist_l_true,dist_e_true,dist_l_est,\
         dist_e_est,sigma,e1,e2,e3,e4\n"
    ));
    assert_eq!(csv.lines().count(), 1 + 101, "1 s at h = 1e-3, decimation 10, plus t = 0");
    assert!(!csv.contains('\r'), "LF line endings only");
    let summary = stdout(&result);
    for label in ["rows:", "rms_error:", "max_abs_error:", "settling_time_2pct:", "steady_state_error:"] {
        assert!(summary.contains(label), "summary missing `{label}`: {summary}");
    }
}

#[test]
fn simulate_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let result =
            vssea(&["simulate", "--out", out.to_str().unwrap(), "--set", "sim.duration=2"]);
        assert_eq!(code(&result), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn override_order_does_not_change_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let forward = [
        "simulate", "--out", "", "--set", "plant.k=120", "--set", "observer.bandwidth=300",
        "--set", "sim.duration=1",
    ];
    let mut backward = vec![forward[0], forward[1], ""];
    for pair in forward[3..].chunks(2).rev() {
        backward.extend_from_slice(pair);
    }
    let mut fwd = forward.to_vec();
    fwd[2] = a.to_str().unwrap();
    backward[2] = b.to_str().unwrap();
    assert_eq!(code(&vssea(&fwd)), 0);
    assert_eq!(code(&vssea(&backward)), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn config_file_and_overrides_compose() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.cfg");
    std::fs::write(
        &config,
        "# tighter pole set and a shorter run\n\
         [controller]\n\
         kind = pp_dob\n\
         pole = -6\n\
         [sim]\n\
         duration = 1.5\n",
    )
    .unwrap();
    let out = dir.path().join("run.csv");
    let result = vssea(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--set",
        "sim.duration=0.5",
    ]);
    assert_eq!(code(&result), 0, "stderr: {}", stderr(&result));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 1 + 51, "the override shortens the file's duration");
}

#[test]
fn config_errors_exit_one_with_diagnostics() {
    // Unknown key.
    let result = vssea(&["simulate", "--set", "plant.mass=1"]);
    assert_eq!(code(&result), 1);
    assert!(stderr(&result).contains("plant.mass"), "stderr: {}", stderr(&result));

    // Invariant violation names the key path.
    let result = vssea(&["simulate", "--set", "sim.step_s=-1"]);
    assert_eq!(code(&result), 1);
    assert!(stderr(&result).contains("sim.step_s"));

    // Type mismatch.
    let result = vssea(&["simulate", "--set", "plant.k=sideways"]);
    assert_eq!(code(&result), 1);

    // Missing config file.
    let result = vssea(&["simulate", "--config", "/nonexistent/path.cfg"]);
    assert_eq!(code(&result), 1);

    // Unknown section gets a line number.
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.cfg");
    std::fs::write(&config, "[plant]\nk = 100\n[engine]\nrpm = 9000\n").unwrap();
    let result = vssea(&["simulate", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&result), 1);
    assert!(stderr(&result).contains("line 3"), "stderr: {}", stderr(&result));

    // Bad flags are config errors too.
    let result = vssea(&["simulate", "--frobnicate"]);
    assert_eq!(code(&result), 1);
}

#[test]
fn synthesize_reports_rank_and_binomial_gains() {
    let result = vssea(&["synthesize", "--set", "controller.pole=-2"]);
    assert_eq!(code(&result), 0);
    let report = stdout(&result);
    assert!(report.contains("controllability rank: 4"), "report: {report}");
    assert!(report.contains("gains K: [16, 32, 24, 8]"), "report: {report}");
    assert!(report.contains("observer polynomial Hurwitz: yes"));
    assert!(report.contains("lyapunov P positive definite: yes"));
}

#[test]
fn synthesize_rejects_unstable_poles_with_exit_two() {
    let result = vssea(&["synthesize", "--set", "controller.pole=1"]);
    assert_eq!(code(&result), 2);
    assert!(stderr(&result).contains("negative real part"), "stderr: {}", stderr(&result));
}

#[test]
fn diverging_run_exits_three_and_keeps_a_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("partial.csv");
    let result = vssea(&[
        "simulate",
        "--out",
        out.to_str().unwrap(),
        "--set",
        "sim.step_s=0.2",
    ]);
    assert_eq!(code(&result), 3);
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.lines().count() > 2, "partial rows must be retained");
    assert!(csv.lines().last().unwrap().starts_with("# truncated:"), "csv tail: {csv:?}");
    assert!(stderr(&result).contains("diverged"));
}

#[test]
fn sweep_over_bandwidth_shows_monotone_improvement() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let result = vssea(&[
        "sweep",
        "--sweep",
        "observer.bandwidth=15.7,157,1571",
        "--set",
        "disturbance.link_t_off=1e9",
        "--set",
        "disturbance.motor_t_off=1e9",
        "--set",
        "sim.duration=6",
        "--set",
        "sim.step_s=1e-4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 0, "stderr: {}", stderr(&result));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with(
        "value,rms_error,max_abs_error,settling_time_2pct,steady_state_error,error\n"
    ));
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][0], "15.7", "rows keep sweep-spec order");
    let steady: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(
        steady[0] > steady[1] && steady[1] > steady[2],
        "steady-state error must fall with bandwidth: {steady:?}"
    );
}

#[test]
fn sweep_over_controller_kind_shows_the_compensation_contrast() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("kinds.csv");
    let result = vssea(&[
        "sweep",
        "--sweep",
        "controller.kind=pp,pp_dob",
        "--set",
        "disturbance.link_t_off=1e9",
        "--set",
        "disturbance.motor_t_off=1e9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 0, "stderr: {}", stderr(&result));
    let rows = csv_rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 2);
    let off: f64 = rows[0][4].parse().unwrap();
    let on: f64 = rows[1][4].parse().unwrap();
    assert!(off / on >= 10.0, "windowed error ratio {:.1} must be >= 10", off / on);
}

#[test]
fn sweep_keeps_bad_rows_in_place_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mixed.csv");
    let result = vssea(&[
        "sweep",
        "--sweep",
        "plant.k=100,-5,120",
        "--set",
        "sim.duration=0.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 0, "two of three rows succeed");
    let rows = csv_rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 3);
    assert!(rows[0].last().unwrap().is_empty(), "first row succeeds");
    assert!(rows[1][1].is_empty() && !rows[1].last().unwrap().is_empty(), "middle row errors");
    assert!(rows[2].last().unwrap().is_empty(), "last row succeeds");
}

#[test]
fn sweep_rejects_an_empty_value_list() {
    let result = vssea(&["sweep", "--sweep", "plant.k="]);
    assert_eq!(code(&result), 1);
    assert!(stderr(&result).contains("at least one value"));
}

#[test]
fn sweep_with_an_unknown_key_exits_one() {
    let result = vssea(&["sweep", "--sweep", "plant.warp=1,2"]);
    assert_eq!(code(&result), 1);
}

#[test]
fn validate_passes_cleanly_and_names_its_checks() {
    let result = vssea(&["validate"]);
    let table = stdout(&result);
    assert_eq!(code(&result), 0, "table: {table}");
    assert!(table.contains("all passed"), "table: {table}");
    for name in [
        "representation-equivalence",
        "nominal-pole-fidelity",
        "controllability-rank",
        "smc-band-containment",
        "baseline-contrast",
    ] {
        assert!(table.contains(name), "missing check `{name}` in: {table}");
    }
    assert!(!table.contains("FAIL"), "table: {table}");
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&vssea(&["--help"])), 0);
    assert_eq!(code(&vssea(&["--version"])), 0);
    // An unknown verb is a usage error, hence a config-class failure.
    assert_eq!(code(&vssea(&["transmogrify"])), 1);
}

#[test]
fn stdout_csv_when_no_out_path_given() {
    let result = vssea(&["simulate", "--set", "sim.duration=0.2"]);
    assert_eq!(code(&result), 0);
    let body = stdout(&result);
    assert!(body.starts_with("t,ref,"), "CSV goes to stdout: {body}");
    assert!(stderr(&result).contains("rms_error:"), "summary goes to stderr");
    assert!(Path::new(env!("CARGO_BIN_EXE_vssea")).exists());
}
