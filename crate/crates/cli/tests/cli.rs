use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use impedance_core::record::{read_csv, read_ndjson};
use impedance_core::sim::steady_state_report;
use serde_json::{json, Value};

fn core_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core")
}

fn scenario(name: &str) -> PathBuf {
    core_dir().join("scenarios").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("impedance-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Writes a copy of a corpus scenario with an absolute robot path, after `edit`.
fn edited(name: &str, out: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(scenario(name)).unwrap()).unwrap();
    let urdf = doc["robot"]["urdf"].as_str().unwrap().to_string();
    doc["robot"]["urdf"] = json!(scenario(name).parent().unwrap().join(urdf));
    edit(&mut doc);
    let path = scratch(out);
    std::fs::write(&path, doc.to_string()).unwrap();
    path
}

fn impedance(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_impedance"))
        .args(args)
        .env("IMPEDANCE_LOG", "error")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_reports_joint_count() {
    let model = core_dir().join("models/panda_like.urdf");
    let out = impedance(&["validate", path_str(&model)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("n=7"));
    let out = impedance(&["validate", path_str(&model), "--base", "link0", "--tip", "tcp"]);
    assert!(stdout(&out).contains("joint1, joint2"));
    let out = impedance(&["validate", path_str(&model), "--dump-model"]);
    let dump: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(dump["joints"].as_array().unwrap().len(), 10);
}

#[test]
fn validate_names_a_dangling_link() {
    let path = scratch("dangling.urdf");
    std::fs::write(
        &path,
        r#"<robot name="r"><link name="a"/><joint name="j" type="revolute"><parent link="a"/><child link="missing_link"/></joint></robot>"#,
    )
    .unwrap();
    let out = impedance(&["validate", path_str(&path)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("missing_link"));
}

#[test]
fn validate_unreadable_path_is_io_error() {
    let out = impedance(&["validate", "/definitely/not/here.urdf"]);
    assert_eq!(out.status.code(), Some(2));
}

fn report_value(text: &str, label: &str) -> f64 {
    let line = text.lines().find(|l| l.contains(label)).unwrap();
    line.split_whitespace().rev().nth(1).unwrap().parse().unwrap()
}

fn mean_pose_error(text: &str) -> Vec<f64> {
    let line = text.lines().find(|l| l.contains("mean pose error")).unwrap();
    let inner = &line[line.find('[').unwrap() + 1..line.find(']').unwrap()];
    inner.split(", ").map(|v| v.parse().unwrap()).collect()
}

#[test]
fn run_equilibrium_writes_a_readable_log() {
    let log = scratch("equilibrium.csv");
    let out = impedance(&["run", path_str(&scenario("equilibrium.json")), "-o", path_str(&log)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(report_value(&text, "|mean translation|") <= 1e-9);
    assert!(report_value(&text, "|mean rotation|") <= 1e-9);
    let records = read_csv(std::io::BufReader::new(std::fs::File::open(&log).unwrap())).unwrap();
    assert_eq!(records.len(), 2000);
}

#[test]
fn run_compliance_reports_the_spring_displacement() {
    let log = scratch("compliance.ndjson");
    let out = impedance(&[
        "run",
        path_str(&scenario("compliance_1dof.json")),
        "-o",
        path_str(&log),
        "--format",
        "ndjson",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let dx = mean_pose_error(&stdout(&out))[0];
    assert!((dx - 0.05).abs() <= 0.001, "dx = {dx}");
    let records = read_ndjson(std::io::BufReader::new(std::fs::File::open(&log).unwrap())).unwrap();
    assert_eq!(records.len(), 6000);
}

#[test]
fn run_rejects_non_positive_time_step() {
    let path = edited("equilibrium.json", "bad_dt.json", |d| d["sim"]["dt"] = json!(0.0));
    let out = impedance(&["run", path_str(&path), "-o", path_str(&scratch("bad_dt.csv"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("dt"));
}

#[test]
fn run_schema_error_and_io_errors() {
    let path = edited("equilibrium.json", "typo.json", |d| d["sim"]["durration"] = json!(1.0));
    let out = impedance(&["run", path_str(&path), "-o", path_str(&scratch("typo.csv"))]);
    assert_eq!(out.status.code(), Some(1));
    let out = impedance(&["run", "/no/such/scenario.json", "-o", path_str(&scratch("x.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    let out = impedance(&["run", path_str(&scenario("equilibrium.json")), "-o", "/no/such/dir/out.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_numeric_blow_up_exits_three() {
    let path = edited("compliance_1dof.json", "runaway.json", |d| {
        d["controller"]["gains"]["k_ca"]["trans"] = json!([1e12, 1e12, 1e12]);
        d["controller"]["gains"]["d_ca"] = json!({"trans": [1e9, 1e9, 1e9], "rot": [0, 0, 0]});
    });
    let log = scratch("runaway.csv");
    let out = impedance(&["run", path_str(&path), "-o", path_str(&log)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("last good t"));
    assert!(log.exists());
}

#[test]
fn sweep_stiffness_table() {
    let out = impedance(&[
        "sweep",
        path_str(&scenario("compliance_1dof.json")),
        "--param",
        "gains.k_ca.trans.x",
        "--values",
        "50,100,200",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    for (row, expected) in rows.iter().zip([0.1, 0.05, 0.025]) {
        let dx: f64 = row[2].parse().unwrap();
        assert!((dx - expected).abs() <= 0.02 * expected, "{row:?}");
    }
}

#[test]
fn sweep_single_value_matches_run() {
    let out = impedance(&[
        "sweep",
        path_str(&scenario("compliance_1dof.json")),
        "--param",
        "controller.gains.k_ca.trans.x",
        "--values",
        "100",
    ]);
    let dx: f64 = stdout(&out).lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    let log = scratch("single.csv");
    impedance(&["run", path_str(&scenario("compliance_1dof.json")), "-o", path_str(&log)]);
    let records = read_csv(std::io::BufReader::new(std::fs::File::open(&log).unwrap())).unwrap();
    assert_eq!(steady_state_report(&records, 1.0).unwrap().mean_pose_error[0], dx);
}

#[test]
fn sweep_input_errors() {
    let path = scenario("compliance_1dof.json");
    let out = impedance(&["sweep", path_str(&path), "--param", "gains.k_ca.trans.w", "--values", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("controller.gains.k_ca.trans.x"));
    let out = impedance(&["sweep", path_str(&path), "--param", "gains.k_ca.trans.x", "--values", ""]);
    assert_eq!(out.status.code(), Some(1));
    let out = impedance(&["sweep", path_str(&path), "--param", "gains.k_ca.trans.x", "--values", "1,abc"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_arguments_are_input_errors() {
    assert_eq!(impedance(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(impedance(&["run", "x.json"]).status.code(), Some(1));
    assert_eq!(impedance(&["--help"]).status.code(), Some(0));
}
