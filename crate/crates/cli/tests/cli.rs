use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const FIG1: &str = include_str!("../../core/tests/fixtures/fig1.mdy");
const FIG1_LINE13: &str = include_str!("../../core/tests/fixtures/fig1_line13.mdy");

fn minidyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minidyn")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, src: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, src).unwrap();
    p
}

#[test]
fn query_examples() {
    let dir = tempfile::tempdir().unwrap();
    let line13 = write(dir.path(), "line13.mdy", FIG1_LINE13);
    let out = minidyn(&["query", line13.to_str().unwrap(), "--at", "exit", "--path", "$arr[1][2]"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "3 6 7 undef\n");

    let fig1 = write(dir.path(), "fig1.mdy", FIG1);
    let out = minidyn(&["query", fig1.to_str().unwrap(), "--at", "5", "--path", "$t", "--path", "[][arr2][2]"]);
    assert_eq!(stdout(&out).lines().next(), Some("1 undef"));

    let empty = write(dir.path(), "empty.mdy", "");
    let out = minidyn(&["query", empty.to_str().unwrap(), "--at", "exit", "--path", "$nope"]);
    assert_eq!(stdout(&out), "undef\n");
}

#[test]
fn parse_errors_exit_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.mdy", "$a = 1;\n$b = ;\n");
    let out = minidyn(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2:"), "{:?}", out);
    let out = minidyn(&["dump-cfg", dir.path().join("missing.mdy").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_writes_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let fig1 = write(dir.path(), "fig1.mdy", FIG1);
    let json = dir.path().join("report.json");
    let out = minidyn(&["analyze", fig1.to_str().unwrap(), "--json", json.to_str().unwrap(), "--depth-limit", "6"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("CFG nodes"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    assert!(report["nodes"].as_array().unwrap().len() > 10);
    assert!(report["exit"]["vars"].as_array().unwrap().iter().any(|v| v["path"] == "$arr2[3]"));
}

#[test]
fn dump_cfg_is_dot() {
    let dir = tempfile::tempdir().unwrap();
    let fig1 = write(dir.path(), "fig1.mdy", FIG1);
    let out = minidyn(&["dump-cfg", fig1.to_str().unwrap()]);
    let dot = stdout(&out);
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("->"));
}

#[test]
fn oracle_check_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let fig1 = write(dir.path(), "fig1.mdy", FIG1);
    let out = minidyn(&["oracle-check", fig1.to_str().unwrap(), "--pool", "0,1,2,3", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["assignmentsTried"], 4);
    assert!(report["violations"].as_array().unwrap().is_empty());
}

#[test]
fn bench_commands() {
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("m1.mdy");
    let out = minidyn(&["gen-bench", "--n", "1", "--merged", "-o", prog.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(fs::read_to_string(&prog).unwrap().contains("$r3_arr2"));

    let csv = dir.path().join("scaling.csv");
    let out = minidyn(&["run-bench", "--max-n", "1", "-o", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "variant,n,cfg_nodes,variables,wall_ms");
    assert_eq!(lines.len(), 5);
}
