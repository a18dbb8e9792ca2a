use std::process::{Command, Output};

use cprt_core::report::AnalysisReport;
use serde_json::Value;

fn program(name: &str) -> String {
    format!("{}/../../programs/{name}.cp", env!("CARGO_MANIFEST_DIR"))
}

fn cprt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cprt"))
        .args(args)
        .env_remove("CPRT_PRECISION")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn analyze_race() {
    let o = cprt(&["analyze", &program("race")]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("verdict  PAST (drift -3/2)"), "{s}");
    assert!(s.contains("2/3*x <= rt(x) <= 2/3*x + 16/3"));
    assert!(s.contains("cos(2.81601*x)"));
    assert!(s.contains("for x = 1*t - 1*h + 1 > 0"));

    let v = json(&cprt(&["analyze", &program("race"), "--json"]));
    assert_eq!(v["verdict"]["kind"], "past");
    assert_eq!(v["drift"], "-3/2");
    assert_eq!(v["rdw_map"]["a"], serde_json::json!([1, -1]));
    assert_eq!(v["closed_form"]["particular"]["coeff"], "2/3");
    assert!(v.get("timings").is_none());
    assert!(v.get("random_walk").is_none());
}

#[test]
fn paper_format_uses_two_digits() {
    let s = stdout(&cprt(&["analyze", &program("race"), "--paper-format"]));
    assert!(s.contains("0.35*0.65^x*cos(2.8*x)"), "{s}");
    assert!(s.contains("+ 1.6\n"));
    let o = cprt(&["eval", &program("race"), "--at", "1000,0", "--paper-format"]);
    assert_eq!(stdout(&o).trim(), "670");
}

#[test]
fn report_json_round_trips() {
    for name in ["race", "direct", "complex_roots", "symmetric", "never_exits"] {
        let o = cprt(&["analyze", &program(name), "--json", "--emit-rdw"]);
        let report: AnalysisReport = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(report.closed_form.is_some(), report.verdict.is_past(), "{name}");
        assert!(report.random_walk.is_some());
        let again = serde_json::to_string_pretty(&report).unwrap();
        assert_eq!(again.trim(), stdout(&o).trim(), "{name}");
    }
}

#[test]
fn timings_only_on_request() {
    let v = json(&cprt(&["analyze", &program("mod_race"), "--json", "--timings"]));
    let stages: Vec<&str> = v["timings"].as_array().unwrap().iter().map(|t| t["stage"].as_str().unwrap()).collect();
    assert_eq!(stages, ["reduce", "decide", "bounds", "charpoly", "roots", "filter", "boundary"]);
}

#[test]
fn non_past_programs() {
    let o = cprt(&["analyze", &program("symmetric"), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["verdict"]["kind"], "ast_not_past");
    assert_eq!(v["drift"], "0");
    assert!(v["closed_form"].is_null());

    let v = json(&cprt(&["analyze", &program("race_positive_drift"), "--json"]));
    assert_eq!(v["verdict"]["kind"], "not_ast");
    assert_eq!(v["drift"], "1/11");

    let v = json(&cprt(&["analyze", &program("never_exits"), "--json"]));
    assert_eq!(v["verdict"]["kind"], "trivial");
    assert_eq!(v["verdict"]["trivial_case"], "never_exits");

    assert_eq!(stdout(&cprt(&["eval", &program("symmetric"), "--at", "3"])).trim(), "inf");
    assert_eq!(stdout(&cprt(&["eval", &program("symmetric"), "--at", "0"])).trim(), "0");
}

#[test]
fn eval_values() {
    let out = |p: &str, at: &str| stdout(&cprt(&["eval", &program(p), "--at", at])).trim().to_string();
    assert_eq!(out("race", "1000,0"), "668.919");
    assert_eq!(out("race", "0,5"), "0");
    assert_eq!(out("irrational", "1"), "3.23607");
    assert_eq!(out("direct", "5,1"), "10");
    assert_eq!(out("mod_race", "-4"), "0");
    let v = json(&cprt(&["eval", &program("race"), "--at", "1000,0", "--json"]));
    assert_eq!(v["x"], 1001);
    assert!(v["digits"].as_str().unwrap().starts_with("668.918895865460857"));
}

#[test]
fn exit_codes() {
    let o = cprt(&["analyze", &program("bad_probs")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("probabilities sum to 21/22"), "{}", stderr(&o));

    assert_eq!(cprt(&["eval", &program("race"), "--at", "1"]).status.code(), Some(1));
    assert_eq!(cprt(&["analyze", &program("does_not_exist")]).status.code(), Some(3));
    assert_eq!(cprt(&["analyze"]).status.code(), Some(1));
    assert_eq!(cprt(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cprt(&["--help"]).status.code(), Some(0));
    assert_eq!(cprt(&["analyze", &program("race"), "--max-degree", "5"]).status.code(), Some(1));
    assert_eq!(cprt(&["analyze", &program("race"), "--precision", "3"]).status.code(), Some(1));
    assert_eq!(cprt(&["check", &program("symmetric")]).status.code(), Some(1));

    let o = cprt(&["analyze", &program("near_critical")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("retry with more digits"));
    assert_eq!(cprt(&["analyze", &program("near_critical"), "--precision", "80"]).status.code(), Some(0));
}

#[test]
fn precision_from_environment() {
    let run = |env: &str, extra: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_cprt"));
        c.args(["analyze", &program("near_critical"), "--json"]).args(extra).env("CPRT_PRECISION", env);
        c.output().unwrap()
    };
    let o = run("80", &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["precision_digits"], 80);
    assert_eq!(run("80", &["--precision", "50"]).status.code(), Some(2));
    assert_eq!(run("lots", &[]).status.code(), Some(1));
}

#[test]
fn simulate_reports() {
    let v = json(&cprt(&["simulate", &program("direct"), "--at", "5,1", "--trials", "200000", "--seed", "42", "--json"]));
    let (m, h) = (v["mean"].as_f64().unwrap(), v["half_width_95"].as_f64().unwrap());
    assert!((m - 10.0).abs() < 3.0 * h, "{v}");
    assert_eq!(v["censored"], 0);

    let o = cprt(&["simulate", &program("race_positive_drift"), "--at", "1", "--trials", "500", "--cap", "5000"]);
    assert!(stdout(&o).contains("warning:"), "{}", stdout(&o));

    let v = json(&cprt(&["simulate", &program("mod_race"), "--at", "-3", "--trials", "10", "--json"]));
    assert_eq!(v["mean"], 0.0);
    assert_eq!(v["half_width_95"], 0.0);
}

#[test]
fn kleene_subcommand() {
    let v = json(&cprt(&["kleene", &program("decrement"), "--at", "5", "--depth", "5", "--json"]));
    assert_eq!(v["exact"], "5");
    assert_eq!(v["arithmetic"], "rational");
    let v = json(&cprt(&["kleene", &program("mod_race"), "--at", "1", "--until", "1e-9", "--json"]));
    assert_eq!(v["converged"], true);
    assert!((v["value"].as_f64().unwrap() - 11.0).abs() < 1e-6);
    let v = json(&cprt(&["kleene", &program("race"), "--at", "0,3", "--depth", "7", "--json"]));
    assert_eq!(v["value"], 0.0);
}

#[test]
fn check_subcommand() {
    for name in ["race", "mod_race"] {
        let o = cprt(&["check", &program(name)]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        let s = stdout(&o);
        assert_eq!(s.lines().count(), 7);
        assert!(s.lines().all(|l| l.starts_with("PASS")));
        assert!(s.contains("recurrence_residual  max residual"));
    }
    let o = cprt(&["check", &program("race"), "--perturb", "1e-3"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("FAIL boundary_residual"));

    let v = json(&cprt(&["check", &program("direct"), "--at", "5,1", "--json"]));
    assert_eq!(v["passed"], true);
}
