use std::path::Path;
use std::process::{Command, Output};

use spectral_sparse::io::{load_instance, read_vector_csv, write_matrix_csv, write_vector_csv};
use spectral_sparse::DenseMatrix;
use spectral_sparse_cli::output::{format_results, read_results};

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectral-sparse"))
        .args(args)
        .current_dir(dir)
        .env_remove("SPECTRAL_SPARSE_SEED")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn recover_missing_file_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    write_vector_csv(&dir.path().join("y.csv"), &[1.0]).unwrap();
    let o = bin(&["recover", "--k", "absent.csv", "--y", "y.csv", "--alpha", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.csv"), "{}", stderr(&o));
}

#[test]
fn recover_malformed_matrix_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("K.csv"), "2,2\n1,0\n0,banana\n").unwrap();
    write_vector_csv(&dir.path().join("y.csv"), &[1.0, 2.0]).unwrap();
    let o = bin(&["recover", "--k", "K.csv", "--y", "y.csv", "--alpha", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("K.csv"), "{}", stderr(&o));
}

#[test]
fn recover_dimension_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_matrix_csv(&dir.path().join("K.csv"), &DenseMatrix::identity(3)).unwrap();
    write_vector_csv(&dir.path().join("y.csv"), &[1.0, 2.0]).unwrap();
    let o = bin(&["recover", "--k", "K.csv", "--y", "y.csv", "--alpha", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("y.csv"), "{}", stderr(&o));
}

#[test]
fn recover_identity_writes_estimate_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let y = [0.5, -1.5, 2.0];
    write_matrix_csv(&dir.path().join("K.csv"), &DenseMatrix::identity(3)).unwrap();
    write_vector_csv(&dir.path().join("y.csv"), &y).unwrap();
    for alg in ["l1_svd", "l_half_svd", "tikhonov", "fista"] {
        let o = bin(
            &["recover", "--k", "K.csv", "--y", "y.csv", "--algorithm", alg, "--alpha", "1e-10", "--out", alg],
            dir.path(),
        );
        assert!(o.status.success(), "{alg}: {}", stderr(&o));
        let x = read_vector_csv(&dir.path().join(alg).join("x_hat.csv")).unwrap();
        for (a, b) in x.iter().zip(y) {
            assert!((a - b).abs() < 1e-4, "{alg}: {x:?}");
        }
        let side: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(alg).join("x_hat.json")).unwrap()).unwrap();
        assert_eq!(side["algorithm"], alg);
        assert_eq!(side["alpha"], 1e-10);
        assert!(side["residual"].as_f64().unwrap() < 1e-3);
    }
}

#[test]
fn generated_instance_round_trips_and_recovers() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["generate", "--m", "40", "--n", "40", "--s", "4", "--snr-db", "80", "--seed", "5", "--out", "inst"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let inst = load_instance(&dir.path().join("inst")).unwrap();
    assert_eq!(inst.x_true.iter().filter(|v| **v != 0.0).count(), 4);
    let direct = spectral_sparse::make_cs_instance(40, 40, 4, 80.0, 5).unwrap();
    assert_eq!(inst.y_noisy, direct.y_noisy);
    assert_eq!(inst.delta, direct.delta);

    let o = bin(&["recover", "--instance", "inst", "--algorithm", "l1_svd", "--out", "rec"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("rec/x_hat.json")).unwrap()).unwrap();
    assert!(side["rerror"].as_f64().unwrap() < 0.05, "{side}");
}

#[test]
fn data_driven_rule_without_delta_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    write_matrix_csv(&dir.path().join("K.csv"), &DenseMatrix::identity(2)).unwrap();
    write_vector_csv(&dir.path().join("y.csv"), &[1.0, 2.0]).unwrap();
    let o = bin(&["recover", "--k", "K.csv", "--y", "y.csv", "--alpha-rule", "discrepancy"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--delta"), "{}", stderr(&o));
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), "{\"trials\": \"many\"}").unwrap();
    let o = bin(&["cs-bench", "--config", "c.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("c.json"));
    let o = bin(&["cs-bench", "--config", "missing.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = bin(&["cs-bench", "--trials", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seed_env_var_is_a_fallback_for_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["cs-bench", "--timing", "off", "--trials", "1", "--algorithms", "l1_svd"];
    std::fs::write(dir.path().join("c.json"), r#"{"sizes":[[20,20]]}"#).unwrap();
    let run = |out: &str, seed_flag: Option<&str>, env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_spectral-sparse"));
        c.args(args).args(["--config", "c.json", "--out", out]).current_dir(dir.path());
        c.env_remove("SPECTRAL_SPARSE_SEED");
        if let Some(s) = seed_flag {
            c.args(["--seed", s]);
        }
        if let Some(e) = env {
            c.env("SPECTRAL_SPARSE_SEED", e);
        }
        assert!(c.output().unwrap().status.success());
        std::fs::read(dir.path().join(out).join("results.csv")).unwrap()
    };
    let by_flag = run("a", Some("99"), None);
    let by_env = run("b", None, Some("99"));
    let flag_wins = run("c", Some("99"), Some("3"));
    let other = run("d", Some("3"), None);
    assert_eq!(by_flag, by_env);
    assert_eq!(by_flag, flag_wins);
    assert_ne!(by_flag, other);
}

#[test]
fn emitted_results_reparse_and_reformat_identically() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"sizes":[[30,30]],"trials":2,"snr_db":null}"#).unwrap();
    let o = bin(&["cs-bench", "--config", "c.json", "--out", "r"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let path = dir.path().join("r/results.csv");
    let rows = read_results(&path).unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.snr_db.is_infinite()));
    let again = format_results(&rows.iter().collect::<Vec<_>>());
    assert_eq!(again, std::fs::read_to_string(&path).unwrap());
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r/meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["trials"], 2);
    assert!(meta["version"].is_string());
    assert!(meta["clock"].is_string());
}

#[test]
fn alpha_and_alpha_rule_conflict() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["cs-bench", "--alpha", "0.1", "--alpha-rule", "discrepancy"], dir.path());
    assert!(!o.status.success());
}
