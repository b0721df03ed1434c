use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use solenoid_triples::convergence_lab::Verdict;

const BIN: &str = env!("CARGO_BIN_EXE_solenoid-triples");

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("solenoid-triples-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str], out: Option<&Path>, env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.env_remove("SOLENOID_TRIPLES_OUT");
    if let Some(dir) = env_out {
        cmd.env("SOLENOID_TRIPLES_OUT", dir);
    }
    if let Some(dir) = out {
        cmd.arg("--out").arg(dir);
    }
    cmd.args(args).output().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn invalid_config_exits_one_with_failed_manifest() {
    let dir = scratch("badcfg");
    let cfg = dir.join("bad.toml");
    fs::write(&cfg, "family = \"solenoid\"\np = 4\n").unwrap();
    let out_dir = dir.join("out");
    let o = run(&["--config", cfg.to_str().unwrap(), "doubling"], Some(&out_dir), None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not prime"));
    let m = manifest(&out_dir);
    assert_eq!(m["verdict"], "FAIL");
    assert_eq!(m["command"], "doubling");
    assert!(m["error"].as_str().unwrap().contains("p = 4"));
}

#[test]
fn config_parse_error_reports_position() {
    let dir = scratch("parse");
    let cfg = dir.join("typo.toml");
    fs::write(&cfg, "family = \"solenoid\"\np = 2\ncolour = 3\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "spectrum"], Some(&dir.join("out")), None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn budget_overflow_keeps_partial_outputs() {
    let dir = scratch("budget");
    let o = run(&["-q", "--budget", "10", "suite-solenoid"], Some(&dir), None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
    let m = manifest(&dir);
    assert_eq!(m["verdict"], "FAIL");
    assert!(m["error"].as_str().unwrap().contains("budget"));
    for f in ["geometry", "spectrum", "functional_calculus", "seminorm_ratio", "dynamics", "doubling", "certificate"] {
        let text = fs::read_to_string(dir.join(format!("{f}.csv"))).unwrap();
        assert_eq!(text.lines().count(), 1, "{f}.csv should hold only its header");
    }
}

#[test]
fn env_output_dir_and_csv_format() {
    let dir = scratch("envcsv");
    let o = run(&["-q", "--format", "csv", "kantorovich", "--points", "0,1,3", "--phi", "1,0,0", "--psi", "0,0,1"], None, Some(&dir));
    assert_eq!(o.status.code(), Some(0));
    let table = fs::read_to_string(dir.join("kantorovich.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("point,0,1,3"));
    assert_eq!(table.lines().count(), 4);
    let w1 = fs::read_to_string(dir.join("kantorovich_w1.csv")).unwrap();
    assert_eq!(w1, "w1,w1_exact\n3.0000000000000000e0,3\n");
    assert_eq!(manifest(&dir)["verdict"], "PASS");
}

#[test]
fn flag_overrides_environment() {
    let dir = scratch("override");
    let (env_dir, flag_dir) = (dir.join("env"), dir.join("flag"));
    let o = run(&["-q", "kantorovich", "--points", "0,2"], Some(&flag_dir), Some(&env_dir));
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_dir.join("kantorovich.json").exists());
    assert!(!env_dir.exists());
}

#[test]
fn interval_example_passes_and_prints_verdict() {
    let dir = scratch("interval");
    let o = run(&["example-interval", "--n", "2"], Some(&dir), None);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().last().unwrap().starts_with("verdict: PASS"), "{stdout}");
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.join("example-interval.json")).unwrap()).unwrap();
    assert!(report["extent_upper"].as_f64().unwrap() <= 0.5);
}

#[test]
fn json_config_is_accepted() {
    let dir = scratch("jsoncfg");
    let cfg = dir.join("cfg.json");
    fs::write(&cfg, r#"{"family": "solenoid", "p": 3, "d": 1, "radii": [3.0], "levels": [1]}"#).unwrap();
    let o = run(&["-q", "--config", cfg.to_str().unwrap(), "spectrum"], Some(&dir), None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&dir);
    assert_eq!(m["config"]["p"], 3);
    assert!(m["config_toml"].as_str().unwrap().contains("p = 3"));
}

#[test]
fn verdict_exit_codes() {
    assert_eq!(Verdict::Pass.exit_code(), 0);
    assert_eq!(Verdict::Fail.exit_code(), 2);
    assert_eq!(Verdict::Undecided.exit_code(), 3);
    assert_eq!(Verdict::Undecided.combine(Verdict::Fail), Verdict::Fail);
    assert_eq!(Verdict::Pass.combine(Verdict::Undecided), Verdict::Undecided);
}
