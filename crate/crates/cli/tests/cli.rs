use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn klb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_klb"))
        .args(args)
        .env_remove("KLB_CALIBRATION")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

fn json(o: &Output) -> Value {
    serde_json::from_str(stdout(o).trim()).expect("one JSON document")
}

fn data_rows(o: &Output) -> Vec<String> {
    stdout(o).lines().filter(|l| !l.starts_with('#')).skip(1).map(str::to_string).collect()
}

#[test]
fn dep_matrix_on_zeros_has_sixteen_rows() {
    let o = klb(&["dep-matrix", "--x", "zeros", "--y", "zeros", "--n-max", "4", "--m-max", "4", "--horizon", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config: {"));
    assert_eq!(lines.next().unwrap(), "n,m,cx,cy,cjoint,dep,norm_dep");
    assert_eq!(data_rows(&o).len(), 16);
    assert!(text.lines().last().unwrap().starts_with("# verdict: "));
}

#[test]
fn config_header_reproduces_the_run() {
    let o = klb(&["dep-matrix", "--x", "alt", "--y", "ones", "--n-max", "3", "--m-max", "2", "--horizon", "5"]);
    let header = stdout(&o).lines().next().unwrap().trim_start_matches("# config: ").to_string();
    let cfg: Value = serde_json::from_str(&header).unwrap();
    assert_eq!(cfg["command"], "dep-matrix");
    assert_eq!(cfg["global"]["horizon"], 5);
    assert_eq!(cfg["args"]["x"], "alt");
    assert_eq!(cfg["global"]["max_len"], 12);
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(klb(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(klb(&["demo-xor", "--horizon", "64"]).status.code(), Some(2), "missing --seed");
    assert_eq!(klb(&["demo-xor", "--seed", "1"]).status.code(), Some(2), "missing --horizon");
    assert_eq!(klb(&["dim-est", "--source", "prng", "--horizon", "64"]).status.code(), Some(2));
    assert_eq!(
        klb(&["bound", "--n", "4", "--sigma1", "3/4", "--sigma2", "1/2"]).status.code(),
        Some(2),
        "sigma1 >= sigma2"
    );
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("t.klb");
    let o = klb(&["color-find", "--n", "4", "--sigma1", "1/2", "--sigma2", "3/4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "color-find without --seed");
}

#[test]
fn complexity_reports_value_and_witness() {
    let o = klb(&["complexity", "--target-bits", "0101"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["value"], 7);
    assert_eq!(v["witness_len"], 7);
    assert_eq!(v["saturated"], false);
    assert!(v["witness_hex"].is_string());

    let cond = json(&klb(&["complexity", "--target-bits", "0110", "--cond-bits", "0110"]));
    assert!(cond["value"].as_u64().unwrap() <= 6);
}

#[test]
fn cap_and_search_failures_have_their_own_codes() {
    let o = klb(&["complexity", "--target-bits", "0101", "--max-len", "30"]);
    assert_eq!(o.status.code(), Some(3), "search ceiling");
    let o = klb(&["complexity", "--target-bits", "01101001100101101001", "--max-len", "8"]);
    assert_eq!(o.status.code(), Some(4), "nothing within the length cap");
    assert!(json(&o)["value"].is_null());
}

#[test]
fn coloring_find_verify_extract() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("lin.klb");
    let p = path.to_str().unwrap();
    let o = klb(&[
        "color-find", "--n", "4", "--sigma1", "1/2", "--sigma2", "3/4", "--seed", "1", "--count", "2000", "--out", p,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["found"], true);
    assert!(Path::new(&format!("{p}.json")).exists());

    let v = json(&klb(&["color-verify", "--coloring", p, "--audit", "fiber"]));
    assert_eq!(v["passed"], true);

    let e = json(&klb(&["extract", "--coloring", p, "--x", "0000", "--y", "1010", "--z", "1111"]));
    assert_eq!(e["len"], 2);
    assert_eq!(e["w"].as_str().unwrap().len(), 2);

    let bad = klb(&["extract", "--coloring", p, "--x", "000", "--y", "1010", "--z", "1111"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn exhausted_coloring_search_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("none.klb");
    let o = klb(&[
        "color-find", "--n", "5", "--sigma1", "2/5", "--sigma2", "1/2", "--audit", "fiber", "--max-attempts", "0",
        "--seed", "3", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(json(&o)["found"], false);
    assert!(!path.exists());
}

#[test]
fn calibrate_reproduces_the_bundled_record() {
    let o = klb(&["calibrate"]);
    assert!(o.status.success());
    let bundled = include_str!("../../core/calibration.json");
    assert_eq!(stdout(&o), bundled);
}

#[test]
fn calibration_override_is_honoured() {
    let tmp = tempfile::tempdir().unwrap();
    let mut record: Value = serde_json::from_str(include_str!("../../core/calibration.json")).unwrap();
    record["c_l1"] = 7.5.into();
    let path = tmp.path().join("cal.json");
    std::fs::write(&path, record.to_string()).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_klb"))
        .args(["tuple-indep", "--strings", "01,10"])
        .env("KLB_CALIBRATION", &path)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(json(&o)["c_value"], 7.5);
}

#[test]
fn sequence_commands_emit_csv() {
    let o = klb(&["reduce-run", "--reduction", "identity", "--source", "alt", "--horizon", "8", "--n-max", "8"]);
    let rows = data_rows(&o);
    assert_eq!(rows.len(), 8);
    assert_eq!(rows[0], "1,0,1");
    assert_eq!(rows[7], "8,1,8");

    let o = klb(&["dim-est", "--source", "zeros", "--horizon", "256"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("n,cost,cost_per_bit"));
    assert!(stdout(&o).lines().last().unwrap().starts_with("# estimate: "));

    let o = klb(&["demo-xor", "--seed", "4", "--horizon", "128", "--every", "32"]);
    assert_eq!(data_rows(&o).len(), 4);

    let o = klb(&["demo-ce", "--n-max", "16"]);
    assert_eq!(data_rows(&o).len(), 16);
    assert!(stdout(&o).contains("# all_strict_succeed: true"));
}

#[test]
fn bound_signs() {
    let feasible = json(&klb(&["bound", "--n", "30", "--sigma1", "0.1", "--sigma2", "0.5"]));
    assert!(feasible["margin"].as_f64().unwrap() < 0.0);
    let infeasible = json(&klb(&["bound", "--n", "4", "--sigma1", "1/2", "--sigma2", "3/4"]));
    assert!(infeasible["margin"].as_f64().unwrap() > 0.0);
}

#[test]
fn out_flag_writes_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("m.csv");
    let o = klb(&[
        "dep-matrix", "--x", "zeros", "--y", "ones", "--n-max", "2", "--m-max", "2", "--horizon", "2", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(path).unwrap().starts_with("# config: "));
}
