use std::path::Path;
use std::process::{Command, Output};

use collocated::experiment::{find_scenario, read_trace, SCENARIOS};

fn collocated(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_collocated"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn sim_source() -> &'static str {
    find_scenario("sim").unwrap().source
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn short_sim(duration: &str) -> String {
    sim_source().replace("duration = 90.0", &format!("duration = {duration}"))
}

#[test]
fn list_scenarios_names_every_bundled_scenario() {
    let out = collocated(&["list-scenarios"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    for s in SCENARIOS {
        assert!(stdout.contains(s.name), "{} missing from\n{stdout}", s.name);
    }
}

#[test]
fn zero_duration_writes_a_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "zero.cfg", &short_sim("0.0"));
    let trace_path = dir.path().join("zero.csv");
    let out = collocated(&["simulate", "--config", &cfg, "--out", trace_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = read_trace(&std::fs::read_to_string(&trace_path).unwrap()).unwrap();
    assert_eq!(trace.records.len(), 1);
    assert_eq!(trace.records[0].t, 0.0);
    assert!(trace.abort.is_none());
    assert_eq!(trace.meta.seed, 1);
    assert_eq!(trace.meta.scenario.as_deref(), Some("sim"));
}

#[test]
fn short_run_to_stdout_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "short.cfg", &short_sim("0.5"));
    let a = collocated(&["simulate", "--config", &cfg, "--out", "-"]);
    let b = collocated(&["simulate", "--config", &cfg, "--out", "-"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("t,q1,q2,qdot1,qdot2,e1,s1,s2,xi1,xi2,pihat1,"), "{header}");
    assert!(header.ends_with("det_Mn_hat,eta,V,Vdot,pihat_delta_identity"), "{header}");
    let trace = read_trace(&text).unwrap();
    assert_eq!(trace.records.len(), 51);
    assert!((trace.records.last().unwrap().t - 0.5).abs() < 1e-12);
}

#[test]
fn singular_initial_estimate_aborts_with_reason() {
    let dir = tempfile::tempdir().unwrap();
    let text = short_sim("1.0")
        .replace(
            "pihat0 = [1.5, -0.11, 0.01, 2.0, -0.24, 0.08, 0.05, 0.05]",
            "pihat0 = [0.0, -0.11, 0.0, 2.0, -0.24, 0.08, 0.05, 0.05]",
        )
        .replace("law = \"theorem1-desingularized\"", "law = \"theorem1\"");
    let cfg = write_config(dir.path(), "singular.cfg", &text);
    let trace_path = dir.path().join("singular.csv");
    let out = collocated(&["simulate", "--config", &cfg, "--out", trace_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let written = std::fs::read_to_string(&trace_path).unwrap();
    let last = written.lines().last().unwrap();
    assert!(last.starts_with("# error t = "), "{last}");
    assert!(last.contains("singular"), "{last}");
    let trace = read_trace(&written).unwrap();
    assert!(trace.abort.unwrap().reason.contains("singular"));
}

#[test]
fn invalid_config_reports_line_and_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", &sim_source().replace("k = [0.1]", "k = [-0.1]"));
    let out = collocated(&["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = sim_source().lines().position(|l| l == "k = [0.1]").unwrap() + 1;
    assert!(stderr.contains(&format!("line {line}")), "{stderr}");
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = collocated(&["simulate", "--config", "no-such-scenario"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_filter_runs_only_matching_properties() {
    let out = collocated(&["verify", "--filter", "skew", "--machine"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("PASS skew-symmetry"), "{stdout}");
    assert!(!stdout.contains("regressor-identity"), "{stdout}");
    assert!(stdout.lines().any(|l| l.starts_with("skew-symmetry\t")), "{stdout}");

    let none = collocated(&["verify", "--filter", "nothing-matches"]);
    assert_eq!(none.status.code(), Some(2));
}
