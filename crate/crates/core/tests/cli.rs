//! End-to-end runs of the `qtomo` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const HETERODYNE_32: &str = r#"{"kind": "heterodyne_grid", "dim": 32,
    "grid": {"center": [1.0, 0.0], "radius": 3.0, "spacing": 0.25}, "max_truncation": 1e-3}"#;
const HETERODYNE_12: &str = r#"{"kind": "heterodyne_grid", "dim": 12,
    "grid": {"center": [0.5, 0.0], "radius": 2.4, "spacing": 0.3}, "max_truncation": 0.2}"#;
const FOCK_4: &str = r#"{"kind": "fock_projective", "dim": 4}"#;

fn qtomo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtomo"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = qtomo(dir, args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "qtomo {} failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join(name)).unwrap()).unwrap()
}

fn entry(state: &Value, i: usize, j: usize) -> (f64, f64) {
    let z = &state["entries"][i][j];
    (z[0].as_f64().unwrap(), z[1].as_f64().unwrap())
}

#[test]
fn simulate_vacuum_on_fock_gives_one_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "fock.json", FOCK_4);
    write(d, "sim.json", r#"{"command": "simulate", "state": {"kind": "fock", "n": 0}, "n": 10}"#);
    let out = ok(d, &["simulate", "--config", "sim.json", "--pom", "fock.json", "--out", "rec.json"]);
    let rec = json(d, "rec.json");
    assert_eq!(rec["outcomes"], serde_json::json!([{"id": 0, "count": 10}]));
    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(summary.contains("n = 10"), "{summary}");
    assert!(summary.contains("distinct outcomes = 1"), "{summary}");
    assert!(summary.contains("residual mass"), "{summary}");
}

#[test]
fn simulate_coherent_heterodyne_spreads_over_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "het.json", HETERODYNE_32);
    write(
        d,
        "sim.json",
        r#"{"command": "simulate", "state": {"kind": "coherent", "alpha": [1.0, 0.0]}, "n": 500, "seed": 4}"#,
    );
    ok(d, &["simulate", "--config", "sim.json", "--pom", "het.json", "--out", "rec.json"]);
    let rec = json(d, "rec.json");
    let outcomes = rec["outcomes"].as_array().unwrap();
    assert!(outcomes.len() >= 2);
    let total: u64 = outcomes.iter().map(|o| o["count"].as_u64().unwrap()).sum();
    assert_eq!(total, 500);
}

#[test]
fn bad_spec_names_the_offending_field() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "bad_pom.json", r#"{"kind": "fock_projective", "dimm": 4}"#);
    let out = qtomo(d, &["simulate", "--pom", "bad_pom.json", "--n", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("dimm"), "{err}");

    write(d, "fock.json", FOCK_4);
    write(d, "bad_cfg.json", r#"{"command": "simulate", "state": {"kind": "fock", "n": 0}, "samples": 3}"#);
    let out = qtomo(d, &["simulate", "--config", "bad_cfg.json", "--pom", "fock.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("samples"));

    write(d, "neg.json", r#"{"command": "simulate", "state": {"kind": "fock", "n": 0}, "n": 3, "tol": -1.0}"#);
    let out = qtomo(d, &["simulate", "--config", "neg.json", "--pom", "fock.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tol"));
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "fock.json", FOCK_4);
    write(
        d,
        "sim.json",
        r#"{"command": "simulate", "state": {"kind": "thermal", "mean_n": 0.5}, "n": 10, "seed": 1}"#,
    );
    ok(d, &["simulate", "--config", "sim.json", "--pom", "fock.json", "--seed", "2", "--n", "7", "--out", "rec.json"]);
    let rec = json(d, "rec.json");
    assert_eq!(rec["provenance"]["seed"], 2);
    assert_eq!(rec["provenance"]["n"], 7);
}

#[test]
fn orthogonal_estimate_of_a_csv_record() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "fock.json", FOCK_4);
    write(d, "rec.csv", "id,count\n0,3\n1,1\n");
    ok(d, &["estimate", "--record", "rec.csv", "--pom", "fock.json", "--method", "orthogonal", "--out", "est.json"]);
    let est = json(d, "est.json");
    assert_eq!(est["method"], "orthogonal");
    assert_eq!(est["state"]["kind"], "matrix");
    assert_eq!(entry(&est["state"], 0, 0), (0.75, 0.0));
    assert_eq!(entry(&est["state"], 1, 1), (0.25, 0.0));
    assert_eq!(entry(&est["state"], 2, 2), (0.0, 0.0));
    assert!(est["min_eigenvalue"].as_f64().unwrap() >= 0.0);
    assert_eq!(est["non_physical"], false);

    // a CSV record carries no POM of its own
    let out = qtomo(d, &["estimate", "--record", "rec.csv", "--method", "orthogonal"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn iterative_and_closed_form_cat_states_agree_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(
        d,
        "pair.json",
        r#"{"pom_spec": {"kind": "heterodyne_grid", "dim": 32,
            "grid": {"points": [[0.0, 0.0], [1.0, 0.0]], "areas": [0.01, 0.01]}},
            "outcomes": [{"id": 0, "count": 1}, {"id": 1, "count": 1}]}"#,
    );
    ok(d, &["estimate", "--record", "pair.json", "--method", "mle", "--out", "mle.json"]);
    ok(d, &["estimate", "--record", "pair.json", "--method", "double-analytic", "--out", "analytic.json"]);
    let (mle, analytic) = (json(d, "mle.json"), json(d, "analytic.json"));
    assert_eq!(mle["converged"], true);
    for key in ["state", "log_likelihood_per_datum", "measure_offset", "min_eigenvalue", "pom_spec", "options"] {
        assert_eq!(
            serde_json::to_vec(&mle[key]).unwrap(),
            serde_json::to_vec(&analytic[key]).unwrap(),
            "{key} differs"
        );
    }
    // vacuum amplitude of the cat state: (1 + C) / sqrt(2 (1 + C)) with C = e^{-1/2}
    let cm = (-0.5f64).exp();
    let amp = mle["state"]["amplitudes"][0][0].as_f64().unwrap();
    let im = mle["state"]["amplitudes"][0][1].as_f64().unwrap();
    assert!(((amp * amp + im * im).sqrt() - (1.0 + cm) / (2.0 * (1.0 + cm)).sqrt()).abs() < 1e-9);
}

#[test]
fn inversion_of_noisy_heterodyne_data_is_flagged_non_physical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "het.json", HETERODYNE_12);
    write(
        d,
        "sim.json",
        r#"{"command": "simulate", "state": {"kind": "coherent", "alpha": [0.5, 0.0]}, "n": 200, "seed": 17}"#,
    );
    ok(d, &["simulate", "--config", "sim.json", "--pom", "het.json", "--out", "rec.json"]);
    ok(d, &["estimate", "--record", "rec.json", "--method", "inversion", "--out", "inv.json"]);
    let inv = json(d, "inv.json");
    assert!(inv["min_eigenvalue"].as_f64().unwrap() < 0.0);
    assert_eq!(inv["non_physical"], true);
    assert_eq!(inv["inversion"]["likelihood_of_clipped_state"], true);
}

#[test]
fn mle_on_binned_homodyne_is_unsupported() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(
        d,
        "bins.json",
        r#"{"pom_spec": {"kind": "quadrature_bins", "dim": 4, "phases": 1, "bin_edges": ["-inf", 0.1, "inf"]},
            "outcomes": [{"id": 0, "count": 2}]}"#,
    );
    let out = qtomo(d, &["estimate", "--record", "bins.json", "--method", "mle"]);
    assert_eq!(out.status.code(), Some(4));
    let out = qtomo(d, &["estimate", "--record", "bins.json", "--method", "orthogonal"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn single_detection_ensemble_prints_the_thermal_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "het.json", HETERODYNE_32);
    write(
        d,
        "ens.json",
        r#"{"command": "ensemble", "state": {"kind": "coherent", "alpha": [1.0, 0.0]},
            "pom_file": "het.json", "n": 1, "datasets": 10000, "seed": 8}"#,
    );
    let out = ok(d, &["ensemble", "--config", "ens.json", "--out", "ens_out.json"]);
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text
        .lines()
        .find(|l| l.starts_with("fidelity to displaced thermal state"))
        .unwrap_or_else(|| panic!("no fidelity line in {text}"));
    let printed: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(printed >= 0.99, "{line}");
    let report = json(d, "ens_out.json");
    let f = report["monte_carlo"]["expected"]["fidelity"].as_f64().unwrap();
    assert!((f - printed).abs() < 1e-6);
}

#[test]
fn orthogonal_study_table_has_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "fock.json", FOCK_4);
    write(
        d,
        "study.json",
        r#"{"command": "ensemble", "state": {"kind": "thermal", "mean_n": 0.8}, "pom_file": "fock.json",
            "seed": 3, "study": {"dims": [4, 6], "ns": [10, 100, "exact"], "trials": 12}}"#,
    );
    ok(d, &["ensemble", "--config", "study.json", "--out", "study_out.json", "--csv", "table.csv"]);
    let mut reader = csv::Reader::from_path(d.join("table.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "inversion_violation_fraction").unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    for r in rows {
        assert_eq!(r[col].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn repeated_seed_reproduces_every_file() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        write(d, "het.json", HETERODYNE_12);
        write(
            d,
            "sim.json",
            r#"{"command": "simulate", "state": {"kind": "coherent", "alpha": [0.4, 0.2]}, "n": 300, "seed": 99}"#,
        );
        ok(d, &["simulate", "--config", "sim.json", "--pom", "het.json", "--out", "rec.json"]);
        // uncertified estimates still write their file
        let code = qtomo(d, &["estimate", "--record", "rec.json", "--method", "mle", "--out", "mle.json"])
            .status
            .code();
        assert!(matches!(code, Some(0) | Some(3)));
        ["rec.json", "mle.json"].map(|f| std::fs::read(d.join(f)).unwrap())
    };
    assert_eq!(run(), run());
}

#[test]
fn compare_reports_likelihood_fidelity_and_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "fock.json", FOCK_4);
    write(d, "rec.csv", "id,count\n0,5\n2,3\n3,2\n");
    for method in ["mle", "orthogonal"] {
        ok(d, &["estimate", "--record", "rec.csv", "--pom", "fock.json", "--method", method, "--out", &format!("{method}.json")]);
    }
    let out = ok(d, &["compare", "mle.json", "orthogonal.json", "--record", "rec.csv", "--pom", "fock.json", "--out", "cmp.json"]);
    let cmp = json(d, "cmp.json");
    let rows = cmp["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    let l0 = rows[0]["log_likelihood_per_datum"].as_f64().unwrap();
    let l1 = rows[1]["log_likelihood_per_datum"].as_f64().unwrap();
    assert!((l0 - l1).abs() < 1e-9);
    assert!(String::from_utf8_lossy(&out.stdout).contains("log_likelihood"));

    // a single estimate gives a one-row table
    ok(d, &["compare", "orthogonal.json", "--record", "rec.csv", "--pom", "fock.json", "--out", "one.json"]);
    assert_eq!(json(d, "one.json")["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn compare_mle_with_clipped_inversion_on_heterodyne_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "het.json", HETERODYNE_12);
    write(
        d,
        "sim.json",
        r#"{"command": "simulate", "state": {"kind": "coherent", "alpha": [0.5, 0.0]}, "n": 200, "seed": 23}"#,
    );
    ok(d, &["simulate", "--config", "sim.json", "--pom", "het.json", "--out", "rec.json"]);
    ok(d, &["estimate", "--record", "rec.json", "--method", "mle", "--out", "mle.json"]);
    ok(d, &["estimate", "--record", "rec.json", "--method", "inversion", "--out", "inv.json"]);
    write(d, "truth.json", &truth_ket_json(12, 0.5));
    ok(d, &["compare", "mle.json", "inv.json", "--record", "rec.json", "--truth", "truth.json", "--out", "cmp.json"]);
    let rows = json(d, "cmp.json")["rows"].as_array().unwrap().clone();
    assert_eq!(rows[1]["clipped"], true);
    let l_mle = rows[0]["log_likelihood_per_datum"].as_f64().unwrap();
    let l_inv = rows[1]["log_likelihood_per_datum"].as_f64().unwrap();
    assert!(l_mle >= l_inv - 1e-12, "{l_mle} < {l_inv}");
    for r in &rows {
        let f = r["fidelity_to_truth"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&f));
    }
}

#[test]
fn compare_rejects_mismatched_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "fock.json", FOCK_4);
    write(d, "fock6.json", r#"{"kind": "fock_projective", "dim": 6}"#);
    write(d, "rec.csv", "id,count\n0,1\n");
    ok(d, &["estimate", "--record", "rec.csv", "--pom", "fock.json", "--method", "orthogonal", "--out", "a.json"]);
    let out = qtomo(d, &["compare", "a.json", "--record", "rec.csv", "--pom", "fock6.json"]);
    assert_eq!(out.status.code(), Some(2));
}

/// A coherent ket in the state-file format, from the Poisson amplitudes.
fn truth_ket_json(dim: usize, alpha: f64) -> String {
    let mut amps = Vec::with_capacity(dim);
    let mut a = (-alpha * alpha / 2.0).exp();
    for n in 0..dim {
        if n > 0 {
            a *= alpha / (n as f64).sqrt();
        }
        amps.push(serde_json::json!([a, 0.0]));
    }
    serde_json::json!({"kind": "ket", "dim": dim, "amplitudes": amps}).to_string()
}
