use std::path::PathBuf;
use std::process::{Command, Output};

use qmeasure_cli::{run, Command as Cmd, Options, Scenario, Status};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn qmeasure(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmeasure"))
        .args(args)
        .env_remove("QMEASURE_THREADS")
        .output()
        .expect("binary runs")
}

fn run_fixture(cmd: &str, name: &str) -> Output {
    qmeasure(&[cmd, fixture(name).to_str().unwrap()])
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn body(o: &Output) -> String {
    stdout(o).lines().filter(|l| !l.starts_with("timing")).collect::<Vec<_>>().join("\n")
}

fn row<'a>(text: &'a str, check: &str) -> &'a str {
    text.lines()
        .find(|l| l.starts_with(check))
        .unwrap_or_else(|| panic!("no `{check}` row in\n{text}"))
}

fn load(name: &str) -> Scenario {
    Scenario::parse(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

#[test]
fn hadamard_scenario_passes_the_axioms() {
    let o = run_fixture("check-axioms", "hadamard.scn");
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("result    pass"));
}

#[test]
fn perturbed_unitary_fails_on_normalization() {
    let o = run_fixture("check-axioms", "perturbed_unitary.scn");
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(row(&text, "normalization").contains(" fail"));
    assert!(row(&text, "hermiticity").contains(" pass"));
}

#[test]
fn empty_event_list_is_a_usage_error() {
    let o = run_fixture("check-axioms", "no_events.scn");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no events"));
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.scn");
    let text = std::fs::read_to_string(fixture("hadamard.scn")).unwrap().replace("index = 1", "index = 9");
    std::fs::write(&path, text).unwrap();
    let o = qmeasure(&["check-axioms", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 22"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bad_invocations_exit_with_usage() {
    assert_eq!(qmeasure(&["gns"]).status.code(), Some(2));
    assert_eq!(qmeasure(&["frobnicate", "x"]).status.code(), Some(2));
    assert_eq!(qmeasure(&["gns", "/nonexistent/file.scn"]).status.code(), Some(2));
    let o = run_fixture("gns", "two_slit.scn");
    assert_eq!(o.status.code(), Some(2));
    let o = qmeasure(&["gns", fixture("generic_n3.scn").to_str().unwrap(), "--rank-tol", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gns_dimensions() {
    for (name, dim) in [("trivial_delta.scn", "1.000000e0"), ("generic_n3.scn", "3.000000e0"), ("mixed_rank2.scn", "6.000000e0")] {
        let o = run_fixture("gns", name);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
        let text = stdout(&o);
        assert!(row(&text, "dim H₂ ").contains(dim), "{name}: {text}");
    }
}

#[test]
fn onto_outcomes() {
    let o = run_fixture("onto", "generic_n3.scn");
    assert_eq!(o.status.code(), Some(0));
    assert!(row(&stdout(&o), "inversion residual").contains(" pass"));
    let o = run_fixture("onto", "hopping.scn");
    assert_eq!(o.status.code(), Some(1));
    assert!(row(&stdout(&o), "onto").contains("unreachable final configurations 4 5"));
}

#[test]
fn esck_default_matrix_is_within_tolerance() {
    let report = run(Cmd::Esck, &load("esck_free.scn"), &Options::default()).unwrap();
    let checks: Vec<_> = report.records.iter().filter(|r| r.name.starts_with("K ")).collect();
    assert_eq!(checks.len(), 25);
    assert!(checks.iter().all(|r| r.value < 1e-3 && r.status == Status::Pass));
}

#[test]
fn reconstruct_reports_cells() {
    let o = run_fixture("reconstruct", "reconstruct_interval.scn");
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(row(&text, "L² error").contains(" pass"));
    assert!(row(&text, "cells").contains("info"));
    let o = run_fixture("reconstruct", "reconstruct_behind_wall.scn");
    assert_eq!(o.status.code(), Some(1));
    assert!(row(&stdout(&o), "nonvanishing propagator").contains(" fail"));
}

#[test]
fn two_slits_violate_the_classical_sum_rule() {
    let o = run_fixture("interference", "two_slit.scn");
    assert_eq!(o.status.code(), Some(0));
    assert!(row(&stdout(&o), "I₂(upper,lower)").contains("violates the classical sum rule"));
    let three = run(Cmd::Interference, &load("three_slit.scn"), &Options::default()).unwrap();
    let i3 = three.records.iter().find(|r| r.name.starts_with("|I₃")).unwrap();
    assert_eq!(i3.status, Status::Pass);
}

#[test]
fn non_convergence_has_its_own_exit_code() {
    let o = run_fixture("interference", "unconverged.scn");
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn reports_are_deterministic() {
    let a = run_fixture("check-axioms", "hadamard.scn");
    let b = run_fixture("check-axioms", "hadamard.scn");
    assert_eq!(body(&a), body(&b));
    let c = qmeasure(&["check-axioms", fixture("hadamard.scn").to_str().unwrap(), "--seed", "2"]);
    assert_ne!(body(&a), body(&c));
    let g1 = run_fixture("gns", "mixed_rank2.scn");
    let g2 = run_fixture("gns", "mixed_rank2.scn");
    assert_eq!(body(&g1), body(&g2));
}

#[test]
fn json_report_matches_the_text() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = qmeasure(&[
        "gns",
        fixture("generic_n3.scn").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["command"], "gns");
    assert_eq!(v["passed"], true);
    assert_eq!(v["seed"], 7);
    let digest = v["digest"].as_str().unwrap();
    assert!(stdout(&o).contains(&format!("digest    sha256:{digest}")));
}

#[test]
fn thread_cap_is_validated() {
    let path = fixture("hadamard.scn");
    let bad = Command::new(env!("CARGO_BIN_EXE_qmeasure"))
        .args(["check-axioms", path.to_str().unwrap()])
        .env("QMEASURE_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let one = Command::new(env!("CARGO_BIN_EXE_qmeasure"))
        .args(["check-axioms", path.to_str().unwrap()])
        .env("QMEASURE_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(body(&one), body(&run_fixture("check-axioms", "hadamard.scn")));
}

#[test]
fn every_fixture_is_canonical() {
    let mut seen = 0;
    for entry in std::fs::read_dir(fixture("")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("scn") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let s = Scenario::parse(&text).unwrap();
        assert_eq!(s.to_text(), text, "{}", path.display());
        assert_eq!(Scenario::parse(&s.to_text()).unwrap(), s);
        seen += 1;
    }
    assert!(seen >= 10);
}
