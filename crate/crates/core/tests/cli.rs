use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use closed_entanglement::experiment::sweep::{read_csv, CSV_COLUMNS, CSV_SCHEMA};

fn entbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entbound"))
        .args(args)
        .env_remove("ENTBOUND_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// `closed_bound_nats` column of `bound --format csv`.
fn csv_bounds(args: &[&str]) -> Vec<f64> {
    let mut full = vec!["bound", "--format", "csv"];
    full.extend_from_slice(args);
    let out = entbound(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    stdout(&out)
        .lines()
        .skip(1)
        .map(|line| line.split(',').nth(4).unwrap().parse().unwrap())
        .collect()
}

fn one_decimal(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 10.0).round() / 10.0).collect()
}

#[test]
fn bound_single_rows() {
    assert_eq!(one_decimal(&csv_bounds(&["--L", "10", "--M", "5", "--n", "5", "--stats", "fermionic"])), vec![3.5]);
    assert_eq!(csv_bounds(&["--L", "6", "--M", "6", "--n", "6", "--stats", "bosonic"]), vec![0.0]);
    assert_eq!(one_decimal(&csv_bounds(&["--L", "4", "--M", "2", "--n", "4", "--stats", "bosonic"])), vec![2.2]);
}

#[test]
fn bound_table_and_json() {
    let out = entbound(&["bound", "--L", "6", "--M", "3", "--n", "2", "--bits"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("bound/bits"));
    assert!(text.contains("2.321928"), "{text}"); // log2 5

    let out = entbound(&["bound", "--L", "6", "--M", "3", "--n", "2", "--format", "json"]);
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((rows[0]["closed_bound"].as_f64().unwrap() - 5f64.ln()).abs() < 1e-12);
    assert!((rows[0]["general_bound"].as_f64().unwrap() - 7f64.ln()).abs() < 1e-12);
}

#[test]
fn invalid_input_exits_with_two() {
    let out = entbound(&["bound", "--L", "4", "--M", "5", "--n", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("M"));

    let out = entbound(&["bound", "--L", "4", "--n", "9", "--stats", "fermionic"]);
    assert_eq!(out.status.code(), Some(2));

    let out = entbound(&["maxstate", "--L", "3", "--M", "0", "--n", "1"]);
    assert_eq!(out.status.code(), Some(2));

    let out = entbound(&["bound", "--L", "4", "--n", "2", "--stats", "anyons"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn maxstate_reports_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("psi.txt");
    let out = entbound(&["maxstate", "--L", "6", "--M", "3", "--n", "2", "--dump", dump.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("nonzero amplitudes 5"));
    assert!(text.contains("status             OK"));
    let dumped = fs::read_to_string(&dump).unwrap();
    assert!(dumped.starts_with("basis 6 3 2"));

    let out = entbound(&["maxstate", "--L", "8", "--M", "4", "--n", "3", "--json"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((report["entropy"].as_f64().unwrap() - 10f64.ln()).abs() < 1e-10);
    assert!(report["difference"].as_f64().unwrap().abs() < 1e-10);
}

#[test]
fn evolve_single_point_and_invariant_number_statistics() {
    let out = entbound(&["evolve", "--L", "6", "--M", "3", "--n", "2", "--taus", "0"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 2);

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trace.csv");
    let svg = dir.path().join("trace.svg");
    let out = entbound(&[
        "evolve", "--L", "7", "--M", "3", "--n", "3", "--preset", "interaction_only", "--tau-max", "3",
        "--tau-step", "0.25", "--out", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(&header[..5], &["tau", "S1", "S2", "energy", "bound"]);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 13);
    for r in &rows {
        assert!(r[1] <= r[4] + 1e-10);
        assert!((r[3] - rows[0][3]).abs() < 1e-9);
        for (p, p0) in r[5..].iter().zip(&rows[0][5..]) {
            assert!((p - p0).abs() < 1e-10);
        }
    }
    assert!(fs::read_to_string(&svg).unwrap().contains("</svg>"));
}

#[test]
fn selftest_passes() {
    let out = entbound(&["selftest"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(!stdout(&out).contains("FAIL"));
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL_SWEEP: &str = r#"{
    "system": {"M": 2, "n": 2},
    "hamiltonian": ["nonintegrable", "interaction_only"],
    "betas": [0.01, 1.0],
    "L_values": [4, 5],
    "master_seed": 17,
    "maximizer": {"rpts_seeds": 2, "restarts_per_seed": 1, "max_restarts": 2, "max_iterations": 2000},
    "output": {"formats": ["csv", "json", "svg"], "name": "small"}
}"#;

#[test]
fn sweep_writes_csv_json_svg_and_replots() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_SWEEP);
    let out_dir = dir.path().join("out");
    let out = entbound(&["sweep", &config, "--out", out_dir.to_str().unwrap(), "--jobs", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(out_dir.join("small.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_SCHEMA));
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    let rows = read_csv(&csv).unwrap();
    assert_eq!(rows.len(), 8);
    let order: Vec<(String, usize, f64)> = rows.iter().map(|r| (r.preset.clone(), r.l, r.beta)).collect();
    assert_eq!(order[0], ("nonintegrable".to_string(), 4, 0.01));
    assert_eq!(order[1], ("nonintegrable".to_string(), 4, 1.0));
    assert_eq!(order[2], ("nonintegrable".to_string(), 5, 0.01));
    assert_eq!(order[4].0, "interaction_only");
    for r in &rows {
        assert!(r.error.is_none());
        assert!(r.mean_max_entropy.unwrap() <= r.bound + 1e-9);
    }

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("small.json")).unwrap()).unwrap();
    assert_eq!(json["points"].as_array().unwrap().len(), 8);
    assert!(json["points"][0]["wall_time_s"].as_f64().unwrap() >= 0.0);

    let svg = fs::read_to_string(out_dir.join("small.svg")).unwrap();
    fs::remove_file(out_dir.join("small.svg")).unwrap();
    let out = entbound(&["plot", out_dir.join("small.csv").to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(out_dir.join("small.svg")).unwrap(), svg);
}

#[test]
fn sweep_rejects_empty_betas_and_large_l() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"system": {"M": 4, "n": 3}, "hamiltonian": "nonintegrable", "betas": [], "L_values": [8]}"#,
    );
    let out = entbound(&["sweep", &config, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("betas"));

    let out = entbound(&["sweep", "--l-values", "12", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--allow-large"));

    let out = entbound(&["sweep", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"system": {"M": 1, "n": 1}, "hamiltonian": "nn_hopping_only", "betas": [0.5],
            "L_values": [3], "maximizer": {"rpts_seeds": 2}, "output": {"formats": ["csv"]}}"#,
    );
    let env_dir = dir.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_entbound"))
        .args(["sweep", &config])
        .env("ENTBOUND_OUTPUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(env_dir.join("sweep.csv").exists());
}
