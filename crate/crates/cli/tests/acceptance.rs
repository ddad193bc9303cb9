//! CLI acceptance: re-running `fit` and `sweep` with identical config must
//! produce byte-identical output files, and the documented exit codes and
//! output schemas hold.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ircsc"))
}

fn run(args: &[&str]) -> Output {
    binary().args(args).output().expect("spawn ircsc")
}

fn assert_success(output: &Output, context: &str) {
    assert!(
        output.status.success(),
        "{context} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn workdir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ircsc-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(
        &path,
        r#"{
  "seed": 2026,
  "task": { "epochs": 8 },
  "data": { "train_samples": 600, "test_samples": 200 },
  "curve_fit": { "samples_per_target": 40 },
  "sweep": { "trials": 2, "eval_samples": 16, "snr_grid_db": [-10.0, 0.0, 6.0], "tau": 75.0 }
}"#,
    )
    .unwrap();
    path
}

fn train_model(dir: &Path, config: &Path) -> PathBuf {
    let model = dir.join("model.json");
    let output = run(&[
        "train",
        "--config",
        config.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
    ]);
    assert_success(&output, "train");
    model
}

/// Criterion 9: `fit` and `sweep` re-runs with identical config produce
/// byte-identical output files.
#[test]
fn criterion_9_fit_and_sweep_rerun_byte_identical() {
    let dir = workdir();
    let config = write_config(&dir);
    let model = train_model(&dir, &config);

    // Training itself is reproducible: a second run writes the same bytes.
    let model_again = dir.join("model-again.json");
    let output = run(&[
        "train",
        "--config",
        config.to_str().unwrap(),
        "--out",
        model_again.to_str().unwrap(),
    ]);
    assert_success(&output, "train rerun");
    assert_eq!(
        std::fs::read(&model).unwrap(),
        std::fs::read(&model_again).unwrap(),
        "model files differ between identical runs"
    );

    let mut fit_outputs = Vec::new();
    for pass in 0..2 {
        let mapping = dir.join(format!("mapping-{pass}.json"));
        let points = dir.join(format!("points-{pass}.csv"));
        let output = run(&[
            "fit",
            "--model",
            model.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--out-mapping",
            mapping.to_str().unwrap(),
            "--out-points",
            points.to_str().unwrap(),
        ]);
        assert_success(&output, "fit");
        fit_outputs.push((
            std::fs::read(&mapping).unwrap(),
            std::fs::read(&points).unwrap(),
        ));
    }
    assert_eq!(
        fit_outputs[0].0, fit_outputs[1].0,
        "mapping JSON differs between runs"
    );
    assert_eq!(
        fit_outputs[0].1, fit_outputs[1].1,
        "fit-points CSV differs between runs"
    );

    let mut sweep_outputs = Vec::new();
    for pass in 0..2 {
        let sweep = dir.join(format!("sweep-{pass}.csv"));
        let output = run(&[
            "sweep",
            "--model",
            model.to_str().unwrap(),
            "--mapping",
            dir.join("mapping-0.json").to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--out",
            sweep.to_str().unwrap(),
        ]);
        assert_success(&output, "sweep");
        sweep_outputs.push(std::fs::read(&sweep).unwrap());
    }
    assert_eq!(
        sweep_outputs[0], sweep_outputs[1],
        "sweep CSV differs between runs"
    );

    // Row count = schemes x grid points x trials.
    let text = String::from_utf8(sweep_outputs[0].clone()).unwrap();
    let rows = text.trim_end().lines().count() - 1;
    assert_eq!(rows, 4 * 3 * 2);
    assert_eq!(
        text.lines().next().unwrap(),
        "scheme,snr_db,trial,m,rate_bps,eta,accuracy,seed"
    );

    println!("ACCEPTANCE 9 (byte-identical fit and sweep re-runs): PASS");
}

#[test]
fn missing_config_exits_2_naming_the_path() {
    let output = run(&[
        "train",
        "--config",
        "/no/such/config.json",
        "--out",
        "/tmp/x.json",
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("/no/such/config.json"), "stderr: {stderr}");
}

#[test]
fn unknown_family_exits_2() {
    let output = run(&["ber", "--family", "rician", "--snr-db", "0"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = workdir();
    let path = dir.join("bad-config.json");
    std::fs::write(&path, r#"{ "seed": 1, "tsak": {} }"#).unwrap();
    let output = run(&[
        "train",
        "--config",
        path.to_str().unwrap(),
        "--out",
        "/tmp/x.json",
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("tsak"), "stderr: {stderr}");
}

#[test]
fn ber_prints_three_column_csv_with_known_theory() {
    let output = run(&[
        "ber", "--family", "rayleigh", "--snr-db", "0", "--n-bits", "1000",
    ]);
    assert_success(&output, "ber");
    let stdout = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = stdout.trim_end().lines().collect();
    assert_eq!(lines[0], "snr_db,theoretical,empirical");
    assert_eq!(lines.len(), 2);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields.len(), 3);
    assert!(
        fields[1].starts_with("0.146446"),
        "theory column: {}",
        fields[1]
    );
}

#[test]
fn awgn_at_60db_is_error_free() {
    let output = run(&[
        "ber", "--family", "awgn", "--snr-db", "60", "--n-bits", "100000",
    ]);
    assert_success(&output, "ber");
    let stdout = String::from_utf8(output.stdout).unwrap();
    let last = stdout.trim_end().lines().last().unwrap();
    assert!(last.ends_with(",0"), "expected zero empirical BER: {last}");
}

#[test]
fn preset_fit_emits_published_coefficients_verbatim() {
    let dir = workdir();
    let mapping_path = dir.join("preset.json");
    let output = run(&[
        "fit",
        "--preset",
        "paper-table-1",
        "--out-mapping",
        mapping_path.to_str().unwrap(),
    ]);
    assert_success(&output, "fit --preset");
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&mapping_path).unwrap()).unwrap();
    assert_eq!(doc["p"], serde_json::json!([-60.34, 210.9, -170.9, 40.3]));
    assert_eq!(doc["q"], serde_json::json!([-1.021, 0.2652]));
    assert_eq!(doc["source"], "paper-table-1");
}

#[test]
fn decide_reports_fallback_at_low_snr_and_minimal_rate_at_trivial_tau() {
    let dir = workdir();
    let mapping_path = dir.join("table1.json");
    run(&[
        "fit",
        "--preset",
        "paper-table-1",
        "--out-mapping",
        mapping_path.to_str().unwrap(),
    ]);
    let weights_path = dir.join("weights.csv");
    std::fs::write(
        &weights_path,
        "channel,weight,rank\n0,0.4,0\n1,0.3,1\n2,0.2,2\n3,0.1,3\n",
    )
    .unwrap();

    // Rayleigh -10 dB with tau = 80: threshold unreachable, M = C.
    let output = run(&[
        "decide",
        "--mapping",
        mapping_path.to_str().unwrap(),
        "--snr-db",
        "-10",
        "--tau",
        "80",
        "--weights",
        weights_path.to_str().unwrap(),
        "--length",
        "49",
    ]);
    assert_success(&output, "decide");
    let doc: serde_json::Value =
        serde_json::from_str(std::str::from_utf8(&output.stdout).unwrap().trim()).unwrap();
    assert_eq!(doc["fallback"], serde_json::json!(true));
    assert_eq!(doc["m"], serde_json::json!(4));

    // tau below phi(P0): one channel suffices.
    let output = run(&[
        "decide",
        "--mapping",
        mapping_path.to_str().unwrap(),
        "--snr-db",
        "6",
        "--tau",
        "3",
        "--weights",
        weights_path.to_str().unwrap(),
    ]);
    assert_success(&output, "decide trivial");
    let doc: serde_json::Value =
        serde_json::from_str(std::str::from_utf8(&output.stdout).unwrap().trim()).unwrap();
    assert_eq!(doc["m"], serde_json::json!(1));
    assert_eq!(doc["fallback"], serde_json::json!(false));
}

#[test]
fn unreachable_fit_target_exits_3() {
    let dir = workdir();
    let config = dir.join("bad-fit-config.json");
    // 1 - BER over Rayleigh tops out well below 0.99 at 0 dB.
    std::fs::write(
        &config,
        r#"{
  "seed": 9,
  "task": { "epochs": 1 },
  "data": { "train_samples": 40, "test_samples": 20 },
  "curve_fit": { "targets": [0.6, 0.65, 0.7, 0.75, 0.8, 0.99], "snr_range_db": [-10.0, 0.0], "samples_per_target": 5 }
}"#,
    )
    .unwrap();
    let model = train_model(&dir, &config);
    let output = run(&[
        "fit",
        "--model",
        model.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--out-mapping",
        dir.join("never.json").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("unreachable"), "stderr: {stderr}");
}

#[test]
fn decide_from_model_and_exported_dataset() {
    let dir = workdir();
    let config = write_config(&dir);
    let model = dir.join("decide-model.json");
    let data = dir.join("decide-test.csv");
    let output = run(&[
        "train",
        "--config",
        config.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--export-test-data",
        data.to_str().unwrap(),
    ]);
    assert_success(&output, "train with export");
    assert!(std::fs::read_to_string(&data).unwrap().starts_with("f0,"));

    let mapping = dir.join("decide-table1.json");
    run(&[
        "fit",
        "--preset",
        "paper-table-1",
        "--out-mapping",
        mapping.to_str().unwrap(),
    ]);
    let output = run(&[
        "decide",
        "--mapping",
        mapping.to_str().unwrap(),
        "--snr-db",
        "4",
        "--tau",
        "82",
        "--model",
        model.to_str().unwrap(),
        "--dataset",
        data.to_str().unwrap(),
        "--sample",
        "3",
    ]);
    assert_success(&output, "decide from model");
    let doc: serde_json::Value =
        serde_json::from_str(std::str::from_utf8(&output.stdout).unwrap().trim()).unwrap();
    let m = doc["m"].as_u64().unwrap();
    assert!((1..=16).contains(&m), "m = {m}");
    assert_eq!(doc["format_version"], serde_json::json!(1));
}

#[test]
fn invalid_mapping_exits_2() {
    let dir = workdir();
    let path = dir.join("broken-mapping.json");
    std::fs::write(
        &path,
        r#"{ "format_version": 1, "p": [1, 2, 3], "q": [0, 1] }"#,
    )
    .unwrap();
    let output = run(&[
        "decide",
        "--mapping",
        path.to_str().unwrap(),
        "--snr-db",
        "0",
        "--tau",
        "50",
        "--weights",
        "/tmp/whatever.csv",
    ]);
    assert_eq!(output.status.code(), Some(2));
}
