//! End-to-end behaviour of the `levelcheck` binary and the batch runner.

use std::process::Command;

use levelcheck_cli::{list_checks, run, RunConfig};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levelcheck"))
}

fn without_timings(mut v: Value) -> Value {
    if let Some(reports) = v["reports"].as_array_mut() {
        for r in reports {
            r["elapsed_ms"] = Value::Null;
        }
    }
    v
}

#[test]
fn appendix_split_config_yields_four_passing_reports() {
    let cfg = RunConfig::from_ini("[run]\nseed = 3\n[appendix-split]\np = 2\nm = 1\n").unwrap();
    let bundle = run(&cfg).unwrap();
    let names: Vec<&str> = bundle.reports.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["closed-immersion", "transversal-sigma", "transversal-sigma-prime", "degree-equality"]);
    assert!(bundle.reports.iter().all(|r| r.pass), "{:#?}", bundle.reports);
    assert_eq!(bundle.status, 0);
}

#[test]
fn empty_config_is_rejected() {
    let dir = std::env::temp_dir().join(format!("levelcheck-empty-{}", std::process::id()));
    std::fs::write(&dir, "[run]\nseed = 1\n").unwrap();
    let out = bin().args(["run", "--config"]).arg(&dir).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no checks"));
    std::fs::remove_file(dir).ok();
}

#[test]
fn infeasible_enumeration_exits_with_two() {
    let out = bin().args(["exact-order", "--g", "2", "--p", "2", "--m", "1", "--cap", "10"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["reports"][0]["error"].is_string());
}

#[test]
fn exit_status_follows_verdicts() {
    let pass = bin().args(["nm-unit", "--p", "7", "--g", "2", "--m", "3"]).output().unwrap();
    assert_eq!(pass.status.code(), Some(0));
    let fail = bin().args(["nm-unit", "--p", "5", "--g", "2", "--m", "2"]).output().unwrap();
    assert_eq!(fail.status.code(), Some(1));
}

#[test]
fn same_seed_gives_identical_bundles() {
    let args = ["remark-pattern", "--p", "2", "--m", "1", "--n", "4", "--samples", "300", "--seed", "11"];
    let a: Value = serde_json::from_slice(&bin().args(args).output().unwrap().stdout).unwrap();
    let b: Value = serde_json::from_slice(&bin().args(args).output().unwrap().stdout).unwrap();
    assert_eq!(without_timings(a), without_timings(b));
}

#[test]
fn grids_from_flags_and_json_output() {
    let path = std::env::temp_dir().join(format!("levelcheck-grid-{}.json", std::process::id()));
    let out = bin()
        .args(["divisor-distribution", "--g", "1,2", "--param", "c1=2,3", "--param", "c2=5", "--json"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["reports"].as_array().unwrap().len(), 4);
    std::fs::remove_file(path).ok();
}

#[test]
fn listing() {
    assert_eq!(list_checks(None).len(), 15);
    assert_eq!(list_checks(Some("appendix")).len(), 2);
    assert!(list_checks(Some("zzz")).is_empty());
    let out = bin().args(["list", "zzz"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let out = bin().arg("list").output().unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 15);
}

#[test]
fn negative_field_label_on_the_command_line() {
    let out = bin().args(["hermit-decompose", "--p", "3", "--field-d", "-1", "--samples", "50"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}
