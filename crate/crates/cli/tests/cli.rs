use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_gencluster");

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--out", dir.to_str().unwrap()]);
    run(&all)
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn read_csv(path: PathBuf) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

const TWO_TRIANGLES: &str = r#"{
  "base_mva": 100.0,
  "buses": [
    {"id": 1, "kind": "generator", "v_mag": 1.0, "p_inject_pu": 0.3, "inertia": 1.0, "damping": 2.0},
    {"id": 2, "kind": "load", "v_mag": 1.0, "p_inject_pu": -0.1, "inertia": 0.0, "damping": 1.0},
    {"id": 3, "kind": "load", "v_mag": 1.0, "p_inject_pu": -0.1, "inertia": 0.0, "damping": 1.0},
    {"id": 4, "kind": "inverter", "v_mag": 1.0, "p_inject_pu": 0.1, "inertia": 0.0, "damping": 2.0},
    {"id": 5, "kind": "load", "v_mag": 1.0, "p_inject_pu": -0.1, "inertia": 0.0, "damping": 1.0},
    {"id": 6, "kind": "load", "v_mag": 1.0, "p_inject_pu": -0.1, "inertia": 0.0, "damping": 1.0}
  ],
  "branches": [
    {"id": 1, "from": 1, "to": 2, "x": 0.1},
    {"id": 2, "from": 2, "to": 3, "x": 0.1},
    {"id": 3, "from": 1, "to": 3, "x": 0.1},
    {"id": 4, "from": 4, "to": 5, "x": 0.1},
    {"id": 5, "from": 5, "to": 6, "x": 0.1},
    {"id": 6, "from": 4, "to": 6, "x": 0.1},
    {"id": 7, "from": 3, "to": 4, "x": 1.0}
  ]
}"#;

fn small_case(dir: &Path) -> PathBuf {
    let p = dir.join("small.json");
    fs::write(&p, TWO_TRIANGLES).unwrap();
    p
}

#[test]
fn cluster_with_fixed_k_writes_all_artifacts() {
    let out = tempfile::tempdir().unwrap();
    let fixture = data("case30_seed42.json");
    let o = run_in(
        out.path(),
        &[
            "cluster",
            "--case",
            fixture.to_str().unwrap(),
            "--k",
            "5",
            "--seed",
            "42",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "partition.json",
        "eigenvalues.csv",
        "gaps.csv",
        "embedding.csv",
        "graph_edges.csv",
        "graph_nodes.csv",
    ] {
        assert!(out.path().join(f).exists(), "{f} missing");
    }
    let p = read_json(out.path().join("partition.json"));
    assert_eq!(p["k"], 5);
    assert_eq!(p["auto_k"], false);
    assert_eq!(p["assignment"].as_array().unwrap().len(), 30);
    assert_eq!(p["quality"].as_array().unwrap().len(), 5);
    let (header, rows) = read_csv(out.path().join("embedding.csv"));
    assert_eq!(header.len(), 6);
    assert_eq!(rows.len(), 30);
}

#[test]
fn auto_k_on_matpower_case_is_recorded() {
    let out = tempfile::tempdir().unwrap();
    let case = data("case30.m");
    let o = run_in(out.path(), &["cluster", "--case", case.to_str().unwrap(), "--auto-k"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let p = read_json(out.path().join("partition.json"));
    assert_eq!(p["auto_k"], true);
    assert_eq!(p["k"], 5);
    let (_, gaps) = read_csv(out.path().join("gaps.csv"));
    assert_eq!(gaps.len(), 9);
}

#[test]
fn missing_file_exits_with_input_code() {
    let o = run(&["cluster", "--case", "/definitely/not/here.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));
}

#[test]
fn malformed_flag_exits_with_input_code() {
    let o = run(&["cluster", "--case", "x.json", "--damping-gen", "25"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn infeasible_power_flow_exits_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let case = dir.path().join("heavy.json");
    fs::write(
        &case,
        r#"{"base_mva": 100.0,
            "buses": [
              {"id": 1, "kind": "generator", "v_mag": 1.0, "p_inject_pu": 3.0, "inertia": 1.0, "damping": 1.0},
              {"id": 2, "kind": "load", "v_mag": 1.0, "p_inject_pu": -3.0, "inertia": 0.0, "damping": 1.0}],
            "branches": [{"id": 1, "from": 1, "to": 2, "x": 0.5}]}"#,
    )
    .unwrap();
    let o = run_in(dir.path(), &["eigs", "--case", case.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn simulate_writes_angle_and_frequency_columns() {
    let out = tempfile::tempdir().unwrap();
    let fixture = data("case30_seed42.json");
    let o = run_in(
        out.path(),
        &[
            "simulate",
            "--case",
            fixture.to_str().unwrap(),
            "--disturb-bus",
            "1",
            "--t-end",
            "5",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(out.path().join("trajectory.csv"));
    assert_eq!(header.len(), 1 + 2 * 30);
    assert_eq!(header[1], "delta_1");
    assert_eq!(header[31], "freq_1");
    assert_eq!(rows.len(), 5001);
    let summary = read_json(out.path().join("simulation.json"));
    assert_eq!(summary["disturbed_bus"], 1);
    assert_eq!(summary["resynchronized"], true);
}

#[test]
fn short_hold_interval_is_rejected() {
    let out = tempfile::tempdir().unwrap();
    let fixture = data("case30_seed42.json");
    let o = run_in(
        out.path(),
        &[
            "simulate",
            "--case",
            fixture.to_str().unwrap(),
            "--disturbance",
            "random",
            "--dt-hold",
            "1e-4",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_disturbance_bus_is_rejected() {
    let out = tempfile::tempdir().unwrap();
    let fixture = data("case30_seed42.json");
    let o = run_in(
        out.path(),
        &["simulate", "--case", fixture.to_str().unwrap(), "--disturb-bus", "99"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn coherence_matrix_has_unit_diagonal() {
    let out = tempfile::tempdir().unwrap();
    let fixture = data("case30_seed42.json");
    let o = run_in(
        out.path(),
        &[
            "coherence",
            "--case",
            fixture.to_str().unwrap(),
            "--k",
            "5",
            "--t-end",
            "5",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(out.path().join("coherence.csv"));
    assert_eq!(header.len(), 31);
    assert_eq!(rows.len(), 30);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0], header[i + 1]);
        let diag: f64 = row[i + 1].parse().unwrap();
        assert!((diag - 1.0).abs() < 1e-9);
    }
    let side = read_json(out.path().join("coherence_clusters.json"));
    assert_eq!(side["rows"].as_array().unwrap().len(), 30);
    assert_eq!(side["k"], 5);
}

#[test]
fn oracle_rows_respect_optimality() {
    let dir = tempfile::tempdir().unwrap();
    let case = small_case(dir.path());
    let o = run_in(dir.path(), &["oracle", "--case", case.to_str().unwrap(), "--kmax", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(dir.path().join("rho_comparison.csv"));
    assert_eq!(header, ["k", "lambda_k", "rho_star", "rho_hat"]);
    assert_eq!(rows.len(), 3);
    for row in rows {
        let star: f64 = row[2].parse().unwrap();
        let hat: f64 = row[3].parse().unwrap();
        assert!(star <= hat + 1e-12, "{star} > {hat}");
    }
}

#[test]
fn oracle_refuses_large_networks() {
    let out = tempfile::tempdir().unwrap();
    let fixture = data("case30_seed42.json");
    let o = run_in(out.path(), &["oracle", "--case", fixture.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eigs_are_ascending_from_zero() {
    let out = tempfile::tempdir().unwrap();
    let case = data("case30.m");
    let o = run_in(out.path(), &["eigs", "--case", case.to_str().unwrap()]);
    assert!(o.status.success());
    let (_, rows) = read_csv(out.path().join("spectrum.csv"));
    let eigs: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(eigs.len(), 30);
    assert!(eigs[0].abs() < 1e-9);
    assert!(eigs.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let out = tempfile::tempdir().unwrap();
    let case = data("case30.m");
    run_in(out.path(), &["eigs", "--case", case.to_str().unwrap()]);
    let (_, rows) = read_csv(out.path().join("spectrum.csv"));
    let mantissa = rows[1][1].split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn robustness_study_is_consistent_and_job_independent() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let fixture = data("case30_seed42.json");
    let args = [
        "robustness",
        "--case",
        fixture.to_str().unwrap(),
        "--scenarios",
        "12",
        "--no-timestamp",
    ];
    let mut one = args.to_vec();
    one.extend(["--jobs", "1"]);
    let mut four = args.to_vec();
    four.extend(["--jobs", "4"]);
    assert!(run_in(a.path(), &one).status.success());
    assert!(run_in(b.path(), &four).status.success());
    let sa = fs::read(a.path().join("study.json")).unwrap();
    let sb = fs::read(b.path().join("study.json")).unwrap();
    assert_eq!(sa, sb);
    assert_eq!(
        fs::read(a.path().join("scenarios.csv")).unwrap(),
        fs::read(b.path().join("scenarios.csv")).unwrap()
    );

    let study: Value = serde_json::from_slice(&sa).unwrap();
    let hist: u64 = study["selected_k_histogram"]
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_u64().unwrap())
        .sum();
    assert_eq!(hist + study["failures"].as_u64().unwrap(), 12);
    for row in study["assignment_frequency"].as_array().unwrap() {
        let s: f64 = row.as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
    assert!(study.get("generated_at").is_none());
}

#[test]
fn timestamp_is_present_by_default() {
    let out = tempfile::tempdir().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let case = small_case(dir.path());
    let o = run_in(out.path(), &["cluster", "--case", case.to_str().unwrap(), "--k", "2"]);
    assert!(o.status.success());
    let p = read_json(out.path().join("partition.json"));
    assert!(p["generated_at"].is_string());
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let case = data("case30.m");
    for d in [&a, &b] {
        let o = run_in(
            d.path(),
            &["cluster", "--case", case.to_str().unwrap(), "--no-timestamp"],
        );
        assert!(o.status.success());
    }
    for f in ["partition.json", "embedding.csv", "eigenvalues.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn json_emit_writes_records() {
    let out = tempfile::tempdir().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let case = small_case(dir.path());
    let o = run_in(
        out.path(),
        &["eigs", "--case", case.to_str().unwrap(), "--emit", "json"],
    );
    assert!(o.status.success());
    let v = read_json(out.path().join("spectrum.json"));
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0]["index"], 1);
    assert!(rows[5]["eigenvalue"].as_f64().unwrap() > 0.0);
}

#[test]
fn resample_changes_json_parameters() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let case = small_case(dir.path());
    let c = case.to_str().unwrap();
    assert!(run_in(a.path(), &["eigs", "--case", c]).status.success());
    assert!(run_in(b.path(), &["eigs", "--case", c, "--damping-load", "3,3"])
        .status
        .success());
    assert_ne!(
        fs::read(a.path().join("spectrum.csv")).unwrap(),
        fs::read(b.path().join("spectrum.csv")).unwrap()
    );
}
