use std::process::{Command, Output};

use serde_json::Value;

fn sigtau(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sigtau")).args(args).env_remove("SIGTAU_SEED").output().unwrap()
}

fn record(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr));
    })
}

#[test]
fn contractibility_on_matrix_algebra() {
    let out =
        sigtau(&["run", "--fixture", "matrix:2", "--pipeline", "contractibility", "--sigma", "id", "--tau", "id"]);
    assert_eq!(out.status.code(), Some(0));
    let r = record(&out);
    let c = &r["output"]["contractibility"];
    assert_eq!((c["derivation_dim"].as_u64(), c["inner_dim"].as_u64()), (Some(3), Some(3)));
    assert_eq!(c["verdict"], "contractible");
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn dual_numbers_are_not_contractible() {
    let out = sigtau(&["run", "--fixture", "dual-numbers", "--pipeline", "contractibility"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(record(&out)["output"]["contractibility"]["verdict"], "not_contractible");
}

#[test]
fn unperturbed_extraction_has_zero_deltas() {
    let out = sigtau(&["run", "--pipeline", "extract", "--perturb", "annihilator:0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = record(&out);
    let deltas = r["output"]["extract"]["triple"]["d"]["per_basis_final_delta"].as_array().unwrap();
    assert!(!deltas.is_empty());
    assert!(deltas.iter().all(|d| d.as_f64() == Some(0.0)));
}

#[test]
fn errors_exit_with_one_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = sigtau(&["run", "--fixture", "matrix:2", "--sigma", "conjugation:9", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!path.exists());
    assert!(String::from_utf8_lossy(&out.stderr).contains("conjugation"));
    assert_eq!(sigtau(&["run", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(sigtau(&["sweep", "--format", "csv"]).status.code(), Some(1));
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let args = ["run", "--pipeline", "roundtrip", "--perturb", "annihilator:0.001", "--seed", "11", "--samples", "200"];
    let a = sigtau(&args);
    let b = sigtau(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = Command::new(env!("CARGO_BIN_EXE_sigtau"))
        .args(["run", "--pipeline", "roundtrip", "--perturb", "annihilator:0.001", "--samples", "200"])
        .env("SIGTAU_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(a.stdout, c.stdout);
    let timed = sigtau(&["run", "--pipeline", "contractibility", "--record-timing"]);
    assert!(record(&timed)["wall_time_ms"].is_f64());
    assert!(record(&sigtau(&["run", "--pipeline", "contractibility"])).get("wall_time_ms").is_none());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"fixture":"dual-numbers","pipeline":"contractibility","seed":3}"#).unwrap();
    let from_file = sigtau(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(from_file.status.code(), Some(2));
    assert_eq!(record(&from_file)["seed"], 3);
    let overridden = sigtau(&["run", "--config", cfg.to_str().unwrap(), "--fixture", "matrix:2"]);
    assert_eq!(overridden.status.code(), Some(0));
    assert_eq!(record(&overridden)["config"]["fixture"], "matrix:2");
}

#[test]
fn out_flag_writes_file_and_csv_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let out = sigtau(&["run", "--pipeline", "amenability", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let row = rdr.records().next().unwrap().unwrap();
    assert_eq!(&row[2], "amenability");
    assert_eq!(&row[5], "contractible");
}

#[test]
fn document_fixture_is_loaded() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("alg.json");
    let doc = sigtau::io::AlgebraDoc::from_algebra(&sigtau::algebra::dual_numbers());
    std::fs::write(&path, serde_json::json!({ "algebra": doc }).to_string()).unwrap();
    let out = sigtau(&["run", "--fixture", path.to_str().unwrap(), "--pipeline", "contractibility"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(record(&out)["output"]["contractibility"]["derivation_dim"], 1);
}

fn sweep_rows(args: &[&str]) -> Vec<csv::StringRecord> {
    let out = sigtau(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    csv::Reader::from_reader(out.stdout.as_slice()).records().map(|r| r.unwrap()).collect()
}

#[test]
fn epsilon_sweep_respects_envelope() {
    let rows = sweep_rows(&["sweep", "--format", "csv", "--epsilon", "0.1,0.01,0.001"]);
    assert_eq!(rows.len(), 3);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0].parse::<usize>().unwrap(), i);
        let realized: f64 = r[6].parse().unwrap();
        let envelope: f64 = r[7].parse().unwrap();
        assert!(realized <= envelope);
        assert_eq!(&r[8], "true");
    }
}

#[test]
fn p_sweep_envelope_matches_closed_form() {
    let rows = sweep_rows(&[
        "sweep",
        "--format",
        "csv",
        "--p",
        "0,0.25,0.5,0.75",
        "--alpha",
        "1",
        "--beta",
        "2",
        "--samples",
        "100",
    ]);
    assert_eq!(rows.len(), 4);
    for r in &rows {
        let p: f64 = r[4].parse().unwrap();
        let envelope: f64 = r[7].parse().unwrap();
        let expected = 1.0 + 2.0 * 2.0 / (2.0 - 2f64.powf(p));
        assert!((envelope - expected).abs() <= 1e-12 * expected, "p {p}: {envelope} vs {expected}");
    }
}
