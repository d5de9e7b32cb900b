use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_extruplan"));
    cmd.env_remove("EXTRUPLAN_CONFIG");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json_out(out: &Output) -> Value {
    assert_eq!(code(out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn profiles() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../profiles")
}

fn profile(name: &str) -> String {
    profiles().join(name).to_string_lossy().into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn encode_heat_sink() {
    let v = json_out(&run(&["encode", "--profile", &profile("heat_sink.json")]));
    let bits: Vec<u64> = v.as_array().unwrap().iter().map(|b| b.as_u64().unwrap()).collect();
    assert_eq!(bits.len(), 170);
    assert_eq!(bits.iter().sum::<u64>(), 9);
    assert_eq!(&bits[..8], &[1, 0, 0, 0, 0, 0, 0, 0]);
}

#[test]
fn gen_cases_and_train_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(code(&run(&["gen-cases", "--n", "40", "--seed", "42", "--out", s(out)])), 0);
    }
    let lib_a = std::fs::read(a.join("library.json")).unwrap();
    assert_eq!(lib_a, std::fs::read(b.join("library.json")).unwrap());

    let (m1, m2) = (dir.path().join("m1.json"), dir.path().join("m2.json"));
    for m in [&m1, &m2] {
        let args = ["train", "--cases", s(&a), "--epochs", "20", "--hidden", "6", "--seed", "3", "--model-out", s(m)];
        assert_eq!(code(&run(&args)), 0);
    }
    assert_eq!(std::fs::read(&m1).unwrap(), std::fs::read(&m2).unwrap());

    let info = json_out(&run(&["inspect-model", s(&m1)]));
    assert_eq!(info["layer_sizes"], json!([170, 6, 93]));
    assert_eq!(info["seed"], 3);
    assert_eq!(info["epochs"], 20);

    let c = dir.path().join("c");
    assert_eq!(code(&run(&["gen-cases", "--n", "40", "--seed", "43", "--out", s(&c)])), 0);
    assert_ne!(lib_a, std::fs::read(c.join("library.json")).unwrap());
}

#[test]
fn train_writes_history() {
    let dir = tempfile::tempdir().unwrap();
    let cases = dir.path().join("cases");
    assert_eq!(code(&run(&["gen-cases", "--n", "10", "--seed", "1", "--out", s(&cases)])), 0);
    let (model, history) = (dir.path().join("m.json"), dir.path().join("h.csv"));
    let args = ["train", "--cases", s(&cases), "--epochs", "15", "--model-out", s(&model), "--history", s(&history)];
    assert_eq!(code(&run(&args)), 0);
    let csv = std::fs::read_to_string(history).unwrap();
    assert_eq!(csv.lines().count(), 16);
    assert!(csv.starts_with("epoch,mse\n1,"));
}

#[test]
fn plan_predict_eval_and_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let cases = dir.path().join("cases");
    let model = dir.path().join("m.json");
    assert_eq!(code(&run(&["gen-cases", "--n", "30", "--seed", "42", "--out", s(&cases)])), 0);
    let args = ["train", "--cases", s(&cases), "--epochs", "300", "--hidden", "32", "--seed", "7", "--model-out", s(&model)];
    assert_eq!(code(&run(&args)), 0);

    let hollow = profile("hollow_rectangle.json");
    let doc = json_out(&run(&["plan", "--profile", &hollow, "--model", s(&model), "--cases", s(&cases)]));
    assert_eq!(doc["source"], "nn_prediction");
    assert_eq!(doc["design"]["die_type"], "hollow");
    assert!(doc["plan"]["total_cost"].as_f64().unwrap() > 0.0);

    let p = json_out(&run(&["predict", "--profile", &hollow, "--model", s(&model)]));
    assert_eq!(p["raw"].as_array().unwrap().len(), 93);
    assert_eq!(p["diagnostics"], json!([]));

    let report = json_out(&run(&["eval", "--model", s(&model), "--cases", s(&cases)]));
    assert_eq!(report["cases"], 30);
    assert!(report["die_type_accuracy"].as_f64().unwrap() >= 0.9);

    let doc_path = dir.path().join("doc.json");
    std::fs::write(&doc_path, serde_json::to_string(&doc).unwrap()).unwrap();
    let est = json_out(&run(&["estimate", "--plan", s(&doc_path)]));
    assert_eq!(est["total_time"], doc["plan"]["total_time"]);
}

#[test]
fn plan_without_model_or_cases_uses_rules() {
    let doc = json_out(&run(&["plan", "--profile", &profile("heat_sink.json")]));
    assert_eq!(doc["source"], "kb_direct");
    let parts: Vec<&str> = doc["plan"]["parts"].as_array().unwrap().iter().map(|p| p["part"].as_str().unwrap()).collect();
    assert_eq!(parts, ["feeder", "die_plate", "backer"]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["encode", "--profile", "missing.json"])), 2);

    let garbled = dir.path().join("garbled.json");
    std::fs::write(&garbled, "{ not json").unwrap();
    assert_eq!(code(&run(&["encode", "--profile", s(&garbled)])), 2);

    let mut spec: Value = serde_json::from_str(&std::fs::read_to_string(profile("heat_sink.json")).unwrap()).unwrap();
    spec["width"] = json!(-3.0);
    let invalid = dir.path().join("invalid.json");
    std::fs::write(&invalid, spec.to_string()).unwrap();
    assert_eq!(code(&run(&["encode", "--profile", s(&invalid)])), 1);
    assert_eq!(code(&run(&["plan", "--profile", s(&invalid)])), 1);

    spec["width"] = json!(24.0);
    spec["wall_thickness"] = json!(12.0);
    std::fs::write(&invalid, spec.to_string()).unwrap();
    assert_eq!(code(&run(&["encode", "--profile", s(&invalid)])), 1);

    let estimator = dir.path().join("estimator.json");
    std::fs::write(&estimator, "{}").unwrap();
    assert_eq!(code(&run(&["plan", "--profile", &profile("heat_sink.json"), "--cost-model", s(&estimator)])), 2);
}

fn config_with(cli: Value, mutate: impl FnOnce(&mut Value)) -> Value {
    let text = include_str!("../../core/data/codec.json");
    let mut v: Value = serde_json::from_str(text).unwrap();
    v["cli"] = cli;
    mutate(&mut v);
    v
}

#[test]
fn config_file_defaults_and_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, config_with(json!({"n": 7, "seed": 5}), |_| {}).to_string()).unwrap();

    let out = dir.path().join("env");
    let status = bin().env("EXTRUPLAN_CONFIG", &cfg).args(["gen-cases", "--out", s(&out)]).output().unwrap();
    assert_eq!(code(&status), 0);
    let lib: Value = serde_json::from_slice(&std::fs::read(out.join("library.json")).unwrap()).unwrap();
    assert_eq!(lib["cases"].as_array().unwrap().len(), 7);

    // Flags win over file defaults.
    let out = dir.path().join("flag");
    let status = bin().env("EXTRUPLAN_CONFIG", &cfg).args(["gen-cases", "--n", "3", "--out", s(&out)]).output().unwrap();
    assert_eq!(code(&status), 0);
    let lib: Value = serde_json::from_slice(&std::fs::read(out.join("library.json")).unwrap()).unwrap();
    assert_eq!(lib["cases"].as_array().unwrap().len(), 3);
}

#[test]
fn broken_config_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let broken = config_with(json!({}), |v| v["input_segments"].as_array_mut().unwrap().truncate(5));
    std::fs::write(&cfg, broken.to_string()).unwrap();
    let out = run(&["--config", s(&cfg), "encode", "--profile", &profile("heat_sink.json")]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing"));

    std::fs::write(&cfg, config_with(json!({"bogus": 1}), |_| {}).to_string()).unwrap();
    assert_eq!(code(&run(&["--config", s(&cfg), "encode", "--profile", &profile("heat_sink.json")])), 2);
}

#[test]
fn library_codec_version_is_checked() {
    let dir = tempfile::tempdir().unwrap();
    let cases = dir.path().join("cases");
    assert_eq!(code(&run(&["gen-cases", "--n", "3", "--out", s(&cases)])), 0);
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, config_with(json!({}), |v| v["codec_version"] = json!("2.0")).to_string()).unwrap();
    let model = dir.path().join("m.json");
    let out = run(&["--config", s(&cfg), "train", "--cases", s(&cases), "--epochs", "1", "--model-out", s(&model)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("codec"));
}
