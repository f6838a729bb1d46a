//! End-to-end runs of the compiled binary: exit codes, file output,
//! determinism, config precedence.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rp-steer"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("no signal")
}

#[test]
fn verdict_exit_codes_follow_the_classification() {
    let unst = run(&["verdict", "--family", "werner", "--eta", "0.5"]);
    assert_eq!(code(&unst), 0, "{}", stderr(&unst));
    let cert: serde_json::Value = serde_json::from_str(&stdout(&unst)).unwrap();
    assert_eq!(cert["kind"], "unsteerable");
    assert_eq!(cert["family"], "werner");
    assert!(cert["min_eig"].as_f64().unwrap() > 0.0);

    let steer = run(&["verdict", "--family", "werner", "--eta", "0.8"]);
    assert_eq!(code(&steer), 1);
    let cert: serde_json::Value = serde_json::from_str(&stdout(&steer)).unwrap();
    assert_eq!(cert["kind"], "steerable");

    // tilt above one: the criterion cannot speak either way.
    let inc = run(&[
        "verdict", "--family", "depolarized", "--alpha", "0.3", "--eta-a", "0.9",
        "--eta-b", "0.3",
    ]);
    assert_eq!(code(&inc), 2, "{}", stderr(&inc));
    let cert: serde_json::Value = serde_json::from_str(&stdout(&inc)).unwrap();
    assert_eq!(cert["kind"], "inconclusive");
}

#[test]
fn fixed_y_verdict_skips_the_search() {
    let o = run(&["verdict", "--family", "werner", "--eta", "0.5", "--y", "2,0,0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cert: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let y: Vec<f64> = cert["Y"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(y, vec![2.0, 0.0, 0.0]);
    // (1 - pi eta / 2) / 2 at eta = 0.5.
    let expect = 0.5 - std::f64::consts::PI / 8.0;
    assert!((cert["min_eig"].as_f64().unwrap() - expect).abs() < 1e-9);
}

#[test]
fn product_state_corners_come_back_unsteerable_with_a_note() {
    let o = run(&["verdict", "--family", "pure-mixed", "--alpha", "0", "--eta", "0.9"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("product state"), "{}", stderr(&o));
    let cert: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(cert["kind"], "unsteerable");
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&run(&["verdict", "--family", "werner"])), 64);
    assert_eq!(code(&run(&["verdict", "--bogus"])), 64);
    assert_eq!(code(&run(&["verdict", "--family", "nonsense", "--eta", "0.5"])), 64);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn config_files_fail_as_data_not_usage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "no_such_knob = 3\n").unwrap();
    let o = run(&[
        "--config", cfg.to_str().unwrap(), "verdict", "--family", "werner", "--eta", "0.5",
    ]);
    assert_eq!(code(&o), 65, "{}", stderr(&o));
    let o = run(&[
        "--config", dir.path().join("absent.toml").to_str().unwrap(), "verdict",
        "--family", "werner", "--eta", "0.5",
    ]);
    assert_eq!(code(&o), 74, "{}", stderr(&o));
}

#[test]
fn malformed_state_files_exit_65_and_missing_files_74() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "1 2 3\n").unwrap();
    let o = run(&["verdict", "--family", "state", "--state", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 65, "{}", stderr(&o));

    let o = run(&[
        "lhs", "verify", "--family", "werner", "--eta", "0.5", "--model",
        dir.path().join("nope.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 74, "{}", stderr(&o));

    let garbage = dir.path().join("model.json");
    fs::write(&garbage, "{\"not\": \"a model\"}").unwrap();
    let o = run(&[
        "lhs", "verify", "--family", "werner", "--eta", "0.5", "--model",
        garbage.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 65, "{}", stderr(&o));
}

#[test]
fn density_matrix_input_reaches_the_same_verdict() {
    // The Werner state at eta = 0.5, written out as a matrix.
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("werner.txt");
    fs::write(
        &state,
        "0.375 0 0 0.25\n0 0.125 0 0\n0 0 0.125 0\n0.25 0 0 0.375\n",
    )
    .unwrap();
    let o = run(&["verdict", "--family", "state", "--state", state.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cert: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(cert["kind"], "unsteerable");
}

#[test]
fn model_build_and_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let o = run(&[
        "lhs", "build", "--family", "pure-mixed", "--alpha", "0.3", "--eta", "0.45",
        "--grid-n", "512", "--out", model.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("max reconstruction error"));
    assert!(model.exists());

    let o = run(&[
        "lhs", "verify", "--family", "pure-mixed", "--alpha", "0.3", "--eta", "0.45",
        "--model", model.to_str().unwrap(), "--thetas", "64",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let line = stdout(&o);
    let err: f64 = line
        .split("error = ")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(err < 1e-4, "reported error {err}, line {line:?}");

    // Verifying against the wrong member reports a large error but still
    // exits cleanly; the number is the product, not a judgment.
    let o = run(&[
        "lhs", "verify", "--family", "werner", "--eta", "0.45", "--model",
        model.to_str().unwrap(), "--thetas", "64",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn model_build_refuses_steerable_members() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let o = run(&[
        "lhs", "build", "--family", "werner", "--eta", "0.8", "--out",
        model.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("cannot build a model"), "{}", stderr(&o));
    assert!(!model.exists());
}

#[test]
fn boundary_sweep_is_deterministic_and_respects_config_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = run_in(
            dir.path(),
            &[
                "boundary", "--samples", "3", "--bisect-iters", "6", "--out",
                out.to_str().unwrap(),
            ],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let bytes_a = fs::read(&a).unwrap();
    assert_eq!(bytes_a, fs::read(&b).unwrap(), "sweep output is not reproducible");
    let text = String::from_utf8(bytes_a).unwrap();
    assert_eq!(text.lines().count(), 4, "{text}");
    assert!(text.starts_with("alpha,eta_lower,eta_upper,valid,Y_n,Y_r1,Y_r3\n"));

    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "samples = 3\nbisect_iters = 6\n").unwrap();
    let c = dir.path().join("c.csv");
    let o = run(&[
        "--config", cfg.to_str().unwrap(), "boundary", "--out", c.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&c).unwrap().lines().count(), 4);

    // A flag outranks the file.
    let d = dir.path().join("d.csv");
    let o = run(&[
        "--config", cfg.to_str().unwrap(), "boundary", "--samples", "4", "--out",
        d.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&d).unwrap().lines().count(), 5);
}

#[test]
fn box_membership_reports_both_ways() {
    let dir = tempfile::tempdir().unwrap();
    let measure = dir.path().join("mu.csv");
    fs::write(&measure, "phi,weight\n0.4,0.3\n1.9,0.4\n3.6,0.3\n").unwrap();

    let inside = run(&["box", "--measure", measure.to_str().unwrap(), "--z", "0.5,0.1,0.1"]);
    assert_eq!(code(&inside), 0, "{}", stderr(&inside));
    let v: serde_json::Value = serde_json::from_str(&stdout(&inside)).unwrap();
    assert_eq!(v["contains"], true);
    assert!(v["two_step"].is_object(), "{v}");
    let q = v["two_step"]["q"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&q));

    let outside = run(&["box", "--measure", measure.to_str().unwrap(), "--z", "4,0,0"]);
    assert_eq!(code(&outside), 1, "{}", stderr(&outside));
    let v: serde_json::Value = serde_json::from_str(&stdout(&outside)).unwrap();
    assert_eq!(v["contains"], false);
    assert!(v["two_step"].is_null());
}

#[test]
fn plot_renders_sweeps_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let o = run(&[
        "boundary", "--samples", "3", "--bisect-iters", "6", "--out", csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let svg1 = dir.path().join("one.svg");
    let svg2 = dir.path().join("two.svg");
    for out in [&svg1, &svg2] {
        let o = run(&[
            "plot", "--input", csv.to_str().unwrap(), "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let bytes = fs::read(&svg1).unwrap();
    assert_eq!(bytes, fs::read(&svg2).unwrap());
    let text = String::from_utf8(bytes).unwrap();
    assert!(text.starts_with("<svg"), "not an svg: {}", &text[..40.min(text.len())]);
    assert!(text.contains("polyline"));

    let o = run(&["plot", "--input", csv.to_str().unwrap(), "--out", "/dev/full"]);
    assert_eq!(code(&o), 74, "{}", stderr(&o));
}
