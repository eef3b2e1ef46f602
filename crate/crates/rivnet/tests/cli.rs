use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn rivnet(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rivnet"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write_doc(dir: &Path, doc: &Value) -> PathBuf {
    let p = dir.join("doc.json");
    std::fs::write(&p, serde_json::to_string_pretty(doc).unwrap()).unwrap();
    p
}

fn stderr_records(o: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&o.stderr).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn r0_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = rivnet(&["r0"], &scenario("large_river_q005.json"), dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&dir.path().join("r0.csv"));
    assert_eq!(header, ["scenario_id", "R0", "lambda_star", "iterations", "residual"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "large-river-q005");
    let r0: f64 = rows[0][1].parse().unwrap();
    assert!((r0 - 1.1711).abs() < 1e-3, "{r0}");
    let (header, rows) = read_csv(&dir.path().join("next_generation.csv"));
    assert_eq!(header, ["edge_id", "x_m", "psi", "phi"]);
    assert_eq!(rows.len(), 801);
}

#[test]
fn steady_on_extinct_scenario_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = rivnet(&["steady"], &scenario("confluence_hh_q04.json"), dir.path());
    assert!(o.status.success());
    let (header, rows) = read_csv(&dir.path().join("steady.csv"));
    assert_eq!(header, ["edge_id", "x_m", "u", "status", "R0", "lambda_star"]);
    assert_eq!(rows[0][3], "extinct");
}

#[test]
fn steady_profile_has_header_and_every_edge() {
    let dir = tempfile::tempdir().unwrap();
    let o = rivnet(&["steady"], &scenario("confluence_zfff_q01.json"), dir.path());
    assert!(o.status.success());
    let (header, rows) = read_csv(&dir.path().join("steady.csv"));
    assert_eq!(header, ["edge_id", "x_m", "u"]);
    assert_eq!(rows.len(), 3 * 401);
    assert!(rows.iter().all(|r| r[2].parse::<f64>().unwrap() > 0.0));
}

#[test]
fn config_errors_exit_2_with_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(scenario("large_river_q005.json")).unwrap()).unwrap();
    doc.as_object_mut().unwrap().remove("boundary");
    let o = rivnet(&["r0"], &write_doc(dir.path(), &doc), dir.path());
    assert_eq!(o.status.code(), Some(2));
    let rec = &stderr_records(&o)[0];
    assert_eq!(rec["level"], "error");
    assert_eq!(rec["kind"], "SchemaViolation");
    assert_eq!(rec["path"], "boundary");

    let o = rivnet(&["r0", "--preset", "9-z"], &scenario("large_river_q005.json"), dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_records(&o)[0]["kind"], "UnknownPreset");

    // The document declares r0.
    let o = rivnet(&["lambda"], &scenario("large_river_q005.json"), dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_records(&o)[0]["path"], "task");
}

#[test]
fn numerical_failure_exits_3() {
    // No mortality and no losses through the ends: R₀ is undefined.
    let dir = tempfile::tempdir().unwrap();
    let doc = json!({
        "network": { "vertices": 2, "edges": [[1, 2, 100.0]], "defaults": { "diffusion": 1, "growth": 1e-5, "mortality": 0 } },
        "boundary": "ZF-FF"
    });
    let o = rivnet(&["r0"], &write_doc(dir.path(), &doc), dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stderr_records(&o)[0]["kind"], "MortalityNotDominant");
}

#[test]
fn unit_warning_is_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(scenario("large_river_q005.json")).unwrap()).unwrap();
    doc["network"]["defaults"]["growth"] = json!(0.8);
    doc["network"]["defaults"]["mortality"] = json!(0.06);
    let o = rivnet(&["validate"], &write_doc(dir.path(), &doc), dir.path());
    assert!(o.status.success());
    let recs = stderr_records(&o);
    assert_eq!(recs.len(), 2);
    assert!(recs.iter().all(|r| r["level"] == "warning" && r["kind"] == "UnitRangeWarning"));
    let (header, rows) = read_csv(&dir.path().join("network.csv"));
    assert_eq!(header[0], "edge_id");
    assert_eq!(rows[0][10], "0.05");
}

#[test]
fn length_sweep_has_75_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = rivnet(&["sweep", "--jobs", "4"], &scenario("length_sweep_afixed.json"), dir.path());
    assert!(o.status.success());
    let (header, rows) = read_csv(&dir.path().join("r0_sweep.csv"));
    assert_eq!(header, ["preset", "L", "R0", "lambda_star", "status", "n_unknowns", "iterations"]);
    assert_eq!(rows.len(), 75);
    assert_eq!(rows[0][0], "1");
    assert_eq!(rows[25][0], "3-a");
    assert_eq!(rows[0][1], "200");
    assert_eq!(rows[74][1], "5000");
    assert!(rows.iter().all(|r| r[4] == "ok"));
}

#[test]
fn one_point_sweep_matches_r0_task() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(scenario("large_river_q005.json")).unwrap()).unwrap();
    doc["task"] = json!("sweep");
    doc["sweep"] = json!({ "axes": [{ "name": "Q", "path": "hydrology.discharge.1", "values": [0.05] }] });
    let o = rivnet(&["sweep"], &write_doc(dir.path(), &doc), dir.path());
    assert!(o.status.success());
    let (_, sweep) = read_csv(&dir.path().join("r0_sweep.csv"));
    let o = rivnet(&["r0"], &scenario("large_river_q005.json"), dir.path());
    assert!(o.status.success());
    let (_, single) = read_csv(&dir.path().join("r0.csv"));
    assert_eq!(sweep[0][1], single[0][1]);
    assert_eq!(sweep[0][2], single[0][2]);
}

#[test]
fn failed_points_stay_in_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(scenario("large_river_q005.json")).unwrap()).unwrap();
    doc["task"] = json!("sweep");
    doc["sweep"] = json!({ "axes": [{ "name": "Q", "path": "hydrology.discharge.1", "values": [0.05, -1.0, 0.09] }] });
    let o = rivnet(&["sweep"], &write_doc(dir.path(), &doc), dir.path());
    assert!(o.status.success());
    let (_, rows) = read_csv(&dir.path().join("r0_sweep.csv"));
    let status: Vec<&str> = rows.iter().map(|r| r[3].as_str()).collect();
    assert_eq!(status, ["ok", "SchemaViolation", "ok"]);
    assert_eq!(rows[1][1], "");
}

#[test]
fn simulate_field_layout() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(scenario("large_river_q005.json")).unwrap()).unwrap();
    doc["task"] = json!("simulate");
    doc["target_h"] = json!(20);
    doc["simulate"] = json!({ "t_end": 864000, "dt": 86400, "samples": 5, "initial": 0.5 });
    let o = rivnet(&["simulate"], &write_doc(dir.path(), &doc), dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&dir.path().join("field.csv"));
    assert_eq!(header, ["t_s", "edge_id", "x_m", "u"]);
    assert_eq!(rows.len(), 6 * 81);
    assert_eq!(rows[0][0], "0");
    assert_eq!(rows.last().unwrap()[0], "864000");
}
