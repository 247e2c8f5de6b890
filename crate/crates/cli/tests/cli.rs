//! End-to-end tests of the binary: exit-code contract, report shape,
//! determinism, and the CSV interfaces.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_grandexp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad json ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

#[test]
fn norm_of_constant_reports_value_and_argmax() {
    let out = run(&["norm", "--gen", "constant:c=2,n=8", "--theta", "1"]);
    assert!(out.status.success());
    let v = json_of(&out);
    let report = &v["payload"][0]["report"];
    assert!((report["value"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(report["argmax_exponent"].as_f64().unwrap(), 1.0);
    assert_eq!(v["passed"], serde_json::Value::Bool(true));
    // defaults are echoed so the report is self-describing
    assert_eq!(v["params"]["p_max"].as_f64().unwrap(), 1e4);
    assert_eq!(v["params"]["ratio"].as_f64().unwrap(), 1.05);
}

#[test]
fn verify_thm31_on_log_witness_passes_with_expected_values() {
    let out = run(&[
        "verify",
        "thm31",
        "--gen",
        "log_power:theta=1,n=100000",
        "--theta",
        "1",
    ]);
    assert!(out.status.success());
    let v = json_of(&out);
    let checks = v["payload"]["checks"].as_array().unwrap();
    let find = |name: &str| {
        checks
            .iter()
            .find(|c| c["name"] == name)
            .unwrap_or_else(|| panic!("missing check {name}"))
    };
    let grand = find("grand_norm")["observed"].as_f64().unwrap();
    let weak = find("weak_norm")["observed"].as_f64().unwrap();
    assert!((grand - 1.0).abs() < 0.02, "grand {grand}");
    assert!((weak - 0.3679).abs() < 0.02 * 0.3679, "weak {weak}");
}

#[test]
fn verify_axioms_reports_zero_violations() {
    let out = run(&["verify", "axioms", "--pairs", "100", "--seed", "7"]);
    assert!(out.status.success());
    let v = json_of(&out);
    let checks = v["payload"]["checks"].as_array().unwrap();
    let violations = checks
        .iter()
        .filter(|c| c["name"].as_str().unwrap().ends_with("_violations"))
        .map(|c| c["observed"].as_f64().unwrap())
        .sum::<f64>();
    assert_eq!(violations, 0.0);
}

#[test]
fn malformed_csv_exits_2_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "value,measure\n1.0,0.5\nx,0.1\n").unwrap();
    let out = run(&["norm", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "stderr: {err}");
}

#[test]
fn invalid_config_exits_64() {
    let out = run(&["norm", "--gen", "nope:n=3"]);
    assert_eq!(out.status.code(), Some(64));
    let out = run(&["norm", "--gen", "constant:c=1,n=8", "--theta", "-1"]);
    assert_eq!(out.status.code(), Some(64));
    let out = run(&["--no-such-flag"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn failed_check_exits_1() {
    // a radial bowl violates the max/min principle
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bowl.csv");
    let mut csv = String::from("x,y,value\n");
    for iy in 0..17 {
        for ix in 0..17 {
            let (x, y) = ((ix as f64 - 8.0) / 8.0, (iy as f64 - 8.0) / 8.0);
            csv.push_str(&format!("{x},{y},{}\n", x * x + y * y));
        }
    }
    std::fs::write(&path, csv).unwrap();
    let out = run(&["monotone", "check", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v = json_of(&out);
    assert_eq!(v["passed"], serde_json::Value::Bool(false));
    assert!(v["payload"]["violation"].is_object());
}

#[test]
fn monotone_relax_passes_and_writes_grid() {
    let dir = tempfile::tempdir().unwrap();
    let grid_path = dir.path().join("relaxed.csv");
    let out = run(&[
        "monotone",
        "relax",
        "--nx",
        "17",
        "--ny",
        "17",
        "--p",
        "3",
        "--seed",
        "4",
        "--out-grid",
        grid_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["payload"]["converged"], serde_json::Value::Bool(true));
    assert_eq!(
        v["payload"]["monotone"]["passed"],
        serde_json::Value::Bool(true)
    );
    // the written grid re-ingests and still passes the standalone check
    let out2 = run(&["monotone", "check", "--input", grid_path.to_str().unwrap()]);
    assert!(out2.status.success());
}

#[test]
fn monotone_relax_accepts_boundary_csv() {
    let dir = tempfile::tempdir().unwrap();
    let bpath = dir.path().join("boundary.csv");
    let mut csv = String::from("index,value\n");
    // a linear ramp along the boundary of a 9x9 grid
    for i in 0..9usize {
        csv.push_str(&format!("{},{}\n", i, i as f64 / 8.0)); // bottom row
        csv.push_str(&format!("{},{}\n", 72 + i, i as f64 / 8.0)); // top row
        csv.push_str(&format!("{},{}\n", i * 9, 0.0)); // left column
        csv.push_str(&format!("{},{}\n", i * 9 + 8, 1.0)); // right column
    }
    std::fs::write(&bpath, csv).unwrap();
    let out = run(&[
        "monotone",
        "relax",
        "--nx",
        "9",
        "--ny",
        "9",
        "--p",
        "2",
        "--boundary",
        bpath.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // a non-boundary index is rejected with exit 2
    std::fs::write(&bpath, "index,value\n40,1.0\n").unwrap();
    let out = run(&[
        "monotone",
        "relax",
        "--nx",
        "9",
        "--ny",
        "9",
        "--boundary",
        bpath.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

fn strip_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.contains("timestamp_unix"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn identical_invocations_are_byte_identical_modulo_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&p1, &p2] {
        let out = run(&[
            "verify",
            "layer-cake",
            "--count",
            "20",
            "--seed",
            "11",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let a = strip_timestamp(&std::fs::read_to_string(&p1).unwrap());
    let b = strip_timestamp(&std::fs::read_to_string(&p2).unwrap());
    assert_eq!(a, b);
    // atomic write leaves no temp file behind
    assert!(!Path::new(&p1.with_extension("tmp")).exists());
}

#[test]
fn csv_format_is_a_flat_projection() {
    let out = run(&[
        "verify",
        "layer-cake",
        "--count",
        "5",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "section,name,passed,observed,bound,slack"
    );
    assert!(text.contains("layer_cake,worst_rel_discrepancy,true"));
}

#[test]
fn operator_pipeline_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (fpath, mpath) = (dir.path().join("f.csv"), dir.path().join("mf.csv"));
    // half indicator on midpoint cells
    let mut csv = String::from("x,value\n");
    let n = 64;
    for i in 0..n {
        let x = (i as f64 + 0.5) / n as f64;
        csv.push_str(&format!("{x},{}\n", if x < 0.5 { 1.0 } else { 0.0 }));
    }
    std::fs::write(&fpath, csv).unwrap();
    let out = run(&[
        "operators",
        "maximal",
        "--input",
        fpath.to_str().unwrap(),
        "--out-grid",
        mpath.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["payload"]["output"]["n"].as_u64().unwrap(), 64);
    // the maximal function dominates: max_abs still 1, L2 grew
    assert!((v["payload"]["output"]["max_abs"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(
        v["payload"]["output"]["l2"].as_f64().unwrap()
            >= v["payload"]["input"]["l2"].as_f64().unwrap()
    );
    let text = std::fs::read_to_string(&mpath).unwrap();
    assert!(text.starts_with("x,value\n"));
}

#[test]
fn ap_and_doubling_commands_report_constants() {
    let out = run(&[
        "operators",
        "ap",
        "--gen-weight",
        "one:n=256",
        "--p",
        "2",
    ]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["payload"]["constant"].as_f64().unwrap(), 1.0);
    assert_eq!(v["payload"]["diverging"], serde_json::Value::Bool(false));

    let out = run(&["operators", "doubling", "--gen-weight", "one:n=256"]);
    let v = json_of(&out);
    assert_eq!(v["payload"]["constant"].as_f64().unwrap(), 2.0);
}

#[test]
fn corpus_emits_reingestible_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "corpus",
        "--n",
        "1000",
        "--emit-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let emitted = dir.path().join("log_power_theta_1.csv");
    assert!(emitted.exists());
    let out = run(&["norm", "--input", emitted.to_str().unwrap(), "--norm", "exp"]);
    assert!(out.status.success());
    let v = json_of(&out);
    let exp = v["payload"][0]["value"].as_f64().unwrap();
    assert!((exp - 2.0).abs() < 0.05, "exp norm {exp}");
}
