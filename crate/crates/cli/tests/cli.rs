use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dwellflee_cli::document::SystemDocument;
use serde_json::Value;

fn systems() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("systems")
}

fn system(name: &str) -> String {
    systems().join(format!("{name}.toml")).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dwellflee")).args(args).output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad report ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn bounds_report_rounds_and_digests() {
    let out = run(&["bounds", "--input", &system("rotating_pair")]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["analysis"], "bounds");
    assert!(r["digest"].as_str().unwrap().starts_with("sha256:"));
    assert_eq!(num(&r["outputs"]["constraints"]["dwell"]), 3.466);

    let r = report(&run(&["bounds", "--input", &system("mixed")]));
    assert_eq!(num(&r["outputs"]["constraints"]["flee"]), 2.338);
    assert_eq!(r["outputs"]["edges"].as_array().unwrap().len(), 2);
}

#[test]
fn norm_override_matches_weighted_document() {
    let dir = tempfile::tempdir().unwrap();
    let weight = dir.path().join("weight.toml");
    std::fs::write(&weight, "weight = [[2.0, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 1.0]]\n").unwrap();
    let norm = format!("ellipsoidal:{}", weight.display());
    let overridden = report(&run(&["bounds", "--input", &system("scope_v"), "--norm", &norm]));
    let weighted = report(&run(&["bounds", "--input", &system("scope_weighted")]));
    assert_eq!(overridden["outputs"]["constraints"], weighted["outputs"]["constraints"]);
    assert_eq!(num(&weighted["outputs"]["constraints"]["dwell"]), 1.295);

    let spectral = report(&run(&["bounds", "--input", &system("scope_weighted"), "--norm", "spectral"]));
    assert_eq!(num(&spectral["outputs"]["constraints"]["dwell"]), 1.377);
}

#[test]
fn rescale_and_probe_options() {
    let r = report(&run(&["bounds", "--input", &system("mixed_unscaled"), "--rescale", "1"]));
    assert!(num(&r["outputs"]["rescaling"]["rho_after"]) < 1.0);
    let out = run(&["bounds", "--input", &system("rotating_pair"), "--probe", "4", "--horizon", "40"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(report(&out)["outputs"]["probe"].is_object());
    assert_eq!(run(&["bounds", "--input", &system("mixed"), "--rescale", "-1"]).status.code(), Some(2));
}

#[test]
fn graph_check_verdicts() {
    let out = run(&["graph-check", "--input", &system("cyclic_unstable")]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["outputs"]["cycle"], "u -> v -> u");

    let out = run(&["graph-check", "--input", &system("mixed")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["outputs"]["acyclic"], true);

    let out = run(&["graph-check", "--input", &system("rotating_pair")]);
    assert!(report(&out)["outputs"]["verdict"].as_str().unwrap().contains("vacuously"));
}

#[test]
fn regress_lists_every_check() {
    let out = run(&["regress"]);
    let r = report(&out);
    let total = r["outputs"]["total"].as_u64().unwrap();
    let passed = r["outputs"]["passed"].as_u64().unwrap();
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.lines().count() as u64, total);
    assert_eq!(out.status.code(), Some(if passed == total { 0 } else { 1 }));
    assert!(stderr.contains("PASS rotating_pair: dwell"));
    assert!(stderr.contains("PASS hull_impulses: lmi-constraints = 24.0000"));
}

#[test]
fn regress_on_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(system("scope"), dir.path().join("scope.toml")).unwrap();
    let out = run(&["regress", "--input", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["outputs"]["total"], 1);
}

#[test]
fn simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let csv_arg = csv.to_str().unwrap();
    let base = ["simulate", "--input", &system("rotating_pair"), "--output", csv_arg, "--modes", "1,2"];

    let out = run(&[&base[..], &["--durations", "4", "--horizon", "18", "--x0", "1,-0.3"]].concat());
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["outputs"]["switches"], 4);
    assert_eq!(r["outputs"]["growth"], false);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "time,x1,x2,mode,norm,jump");
    assert_eq!(text.lines().filter(|l| l.ends_with(",1")).count(), 4);

    // Switching once per quarter turn of the rotation grows the state.
    let fast = run(&[&base[..], &["--durations", "1.1107207345", "--horizon", "60", "--x0", "1,0.3"]].concat());
    assert_eq!(report(&fast)["outputs"]["growth"], true);

    let zero = report(&run(&[&base[..], &["--durations", "2", "--x0", "0,0"]].concat()));
    assert_eq!(num(&zero["outputs"]["final_norm"]), 0.0);
    assert!(zero["outputs"]["max_norm_ratio"].is_null());
}

#[test]
fn simulate_random_signal_respects_dwell() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let out = run(&[
        "simulate",
        "--input",
        &system("mixed"),
        "--output",
        csv.to_str().unwrap(),
        "--signal",
        "random",
        "--horizon",
        "80",
        "--x0",
        "1,0,0",
        "--seed",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let class = &report(&out)["outputs"]["signal_class"];
    assert!(num(&class["per_mode"]["4"]["min"]) >= 9.26);
    assert!(num(&class["per_mode"]["5"]["max"]) <= 2.34);
}

#[test]
fn lyapunov_commands() {
    let r = report(&run(&["lyapunov", "--input", &system("mixed")]));
    assert_eq!(r["outputs"]["alternating_condition"]["text"], "tau > 2 * eta + 8.635");

    let out = run(&["lyapunov", "--input", &system("rotating_pair"), "--tau-range", "0.5:8"]);
    assert_eq!(out.status.code(), Some(0));
    let tau = num(&report(&out)["outputs"]["tau"]);
    assert!((3.35..=3.6).contains(&tau), "{tau}");

    let out = run(&["lyapunov", "--input", &system("rotating_pair"), "--tau-range", "0.5:2"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["lyapunov", "--input", &system("mixed"), "--template", "reset-dwell"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(system("rotating_pair")).unwrap();
    std::fs::write(&path, text.replacen("[graph]", "[graph]\ncomplet = true", 1)).unwrap();
    let out = run(&["bounds", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("complet"));
}

#[test]
fn documents_round_trip() {
    for entry in std::fs::read_dir(systems()).unwrap() {
        let path = entry.unwrap().path();
        let doc = SystemDocument::read(&path).unwrap();
        let spec = doc.to_spec().unwrap();
        let text = SystemDocument::from_spec(&spec, &doc.name).to_toml();
        let again = SystemDocument::parse(&text).unwrap().to_spec().unwrap();
        assert_eq!(again, spec, "{}", path.display());
    }
}
