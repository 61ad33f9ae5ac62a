//! Model-file parsing, round-trip, and defect-fixture tests, plus CLI-level
//! exit-code checks driven through `cli::run`.

use std::path::PathBuf;

use barwitt::cli::{self, Cli};
use barwitt::filt::{check_mfc, MixedFrobeniusAlgebra};
use barwitt::gla::GradedMap;
use barwitt::model::{self, ModelError};
use clap::Parser;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.toml"))
}

const ALL: &[&str] = &[
    "torus",
    "free",
    "genus2",
    "kummer",
    "circle_nerve",
    "bad_commut",
    "bad_dsquare",
    "bad_theta",
    "bad_frobenius",
    "bad_weights",
    "bad_nerve",
];

#[test]
fn every_fixture_parses_and_round_trips_through_emit() {
    for name in ALL {
        let m = model::parse(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        let emitted = model::emit(&m);
        let back = model::parse_str(&emitted).unwrap_or_else(|e| panic!("{name} re-parse: {e}"));
        assert_eq!(m, back, "{name}: emit/parse round trip changed the model");
    }
}

#[test]
fn every_fixture_builds() {
    // defects are semantic: the files themselves must load and build; the
    // validators are what flags them
    for name in ALL {
        let m = model::parse(&fixture(name)).unwrap();
        m.build().unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn an_empty_model_is_rejected() {
    let m = model::parse_str("name = \"nothing\"\n").unwrap();
    match m.build() {
        Err(ModelError::EmptyModel) => {}
        other => panic!("expected EmptyModel, got {other:?}"),
    }
}

#[test]
fn junk_toml_is_a_parse_error() {
    assert!(matches!(model::parse_str("= notvalid ["), Err(ModelError::Parse(_))));
}

#[test]
fn unknown_generator_in_a_differential_is_reported() {
    let src = "name = \"bad\"\ntop_degree = 2\ngenerators = [{ label = \"x\", degree = 1 }]\n[differential]\nx = \"y\"\n";
    let m = model::parse_str(src).unwrap();
    assert!(m.build().is_err());
}

#[test]
fn torus_file_builds_the_expected_algebra() {
    let bm = model::parse(&fixture("torus")).unwrap().build().unwrap();
    let a = bm.algebra.expect("torus has an algebra");
    let dims = a.space.dims();
    assert_eq!(dims.get(&0), Some(&1));
    assert_eq!(dims.get(&1), Some(&2));
    assert_eq!(dims.get(&2), Some(&1));
    a.validate().unwrap();
    let f = bm.frobenius.expect("torus has a Frobenius");
    f.validate(&a).unwrap();
    assert_eq!(f.p, 5);
    let w = bm.weights.expect("torus has weights");
    w.validate().unwrap();
}

#[test]
fn kummer_file_builds_a_theta_extension_with_a_formal_base() {
    let bm = model::parse(&fixture("kummer")).unwrap().build().unwrap();
    let ext = bm.theta.expect("kummer declares theta");
    ext.validate().unwrap();
    assert!(ext.base.d.is_zero(), "base of the Kummer model is formal");
    assert_eq!(ext.total.space.dim(1), 3);
    assert_eq!(ext.base.space.dim(1), 2);
}

#[test]
fn each_defect_fixture_fails_its_own_validator() {
    let load = |n: &str| model::parse(&fixture(n)).unwrap().build().unwrap();

    let bad = load("bad_commut");
    let err = bad.algebra.unwrap().validate().unwrap_err().to_string();
    assert!(err.contains("commutativity"), "witness was: {err}");

    let bad = load("bad_dsquare");
    let err = bad.algebra.unwrap().validate().unwrap_err().to_string();
    assert!(err.contains("d^2"), "witness was: {err}");

    let bad = load("bad_theta");
    let err = bad.theta.unwrap().validate().unwrap_err().to_string();
    assert!(err.contains("theta"), "witness was: {err}");

    let bad = load("bad_frobenius");
    let a = bad.algebra.unwrap();
    let err = bad.frobenius.unwrap().validate(&a).unwrap_err().to_string();
    assert!(err.contains("commute with d"), "witness was: {err}");

    let bad = load("bad_weights");
    let a = bad.algebra.unwrap();
    let f = bad.frobenius.unwrap();
    let w = bad.weights.unwrap();
    let mfa = MixedFrobeniusAlgebra {
        m: a.clone(),
        m_frob: f.clone(),
        n: a.clone(),
        n_filt: w,
        n_frob: f,
        qis: GradedMap::identity(&a.space),
    };
    let rep = check_mfc(&mfa.to_mfc()).unwrap();
    assert!(!rep.passed());
    assert!(rep.failures.iter().any(|s| s.contains("preserve filtration")), "{:?}", rep.failures);

    let bad = load("bad_nerve");
    let err = bad.nerve.unwrap().check_squares().unwrap_err().to_string();
    assert!(err.contains("commute"), "witness was: {err}");
}

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["barwitt"];
    argv.extend_from_slice(args);
    cli::run(&Cli::parse_from(argv))
}

#[test]
fn check_exits_zero_on_every_shipped_model() {
    for name in ["torus", "free", "genus2", "kummer", "circle_nerve"] {
        let code = run(&["check", fixture(name).to_str().unwrap()]);
        assert_eq!(code, 0, "{name} should pass check");
    }
}

#[test]
fn check_exits_nonzero_on_every_defect_model() {
    for name in ["bad_commut", "bad_dsquare", "bad_theta", "bad_frobenius", "bad_weights", "bad_nerve"] {
        let code = run(&["check", fixture(name).to_str().unwrap()]);
        assert_eq!(code, 1, "{name} should fail check");
    }
}

#[test]
fn check_on_a_missing_file_fails_instead_of_crashing() {
    assert_eq!(run(&["check", "/nonexistent/model.toml"]), 1);
    // other commands treat a bad path as a hard error
    assert_eq!(run(&["bar", "/nonexistent/model.toml"]), 2);
}

#[test]
fn pi1_command_reports_the_genus_two_lie_dims() {
    assert_eq!(run(&["pi1", "--level", "2", fixture("genus2").to_str().unwrap()]), 0);
}

#[test]
fn em_ss_command_runs_on_the_torus() {
    assert_eq!(run(&["em-ss", "--pages", "2", fixture("torus").to_str().unwrap()]), 0);
}

#[test]
fn monodromy_command_requires_a_theta_model() {
    assert_eq!(run(&["monodromy", fixture("kummer").to_str().unwrap()]), 0);
    assert_eq!(run(&["monodromy", fixture("torus").to_str().unwrap()]), 2);
}

#[test]
fn json_report_is_written_when_requested() {
    let out = std::env::temp_dir().join("barwitt_model_tests_report.json");
    let _ = std::fs::remove_file(&out);
    let code = run(&["cohomology", fixture("torus").to_str().unwrap(), "--json", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let body = std::fs::read_to_string(&out).unwrap();
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["passed"], true);
    assert_eq!(v["data"]["h_dims"]["1"], 2);
    let _ = std::fs::remove_file(&out);
}
