use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eqkit::experiment::ExperimentConfig;

fn eqkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eqkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn afriat_reports_one_based_cycle_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "t,p_1,p_2,x_1_1,x_1_2\n1,1,1,0,2\n2,2,1,2,0\n");
    let out = eqkit(&["test-afriat", "--data", &bad]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "fail");
    assert_eq!(v["cycle"], serde_json::json!([1, 2, 1]));

    let good = write(dir.path(), "good.csv", "t,p_1,p_2,x_1_1,x_1_2\n1,1,2,2,1\n2,2,1,1,2\n");
    let out = eqkit(&["test-afriat", "--data", &good]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "pass");
    assert_eq!(v["certificate"]["lambda"].as_array().unwrap().len(), 2);
}

#[test]
fn malformed_input_exits_with_row_number() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "t,p_1,x_1_1\n1,1,1\n2,-1,1\n");
    let out = eqkit(&["test-afriat", "--data", &bad]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 3"), "{}", err);

    let empty = write(dir.path(), "empty.csv", "t,p_1,x_1_1\n");
    let out = eqkit(&["test-nash", "--data", &empty]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("T >= 1 required"));
}

#[test]
fn generated_potential_game_data_passes_and_stat_test_accepts() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let spec = configs().join("malicious.json");
    let out = eqkit(&[
        "gen-data",
        "--spec",
        spec.to_str().unwrap(),
        "--T",
        "8",
        "--seed",
        "5",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = eqkit(&["test-nash", "--data", data.to_str().unwrap(), "--agents", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["verdict"], "pass");

    let noisy = dir.path().join("y.csv");
    let out = eqkit(&[
        "gen-data",
        "--T",
        "8",
        "--seed",
        "5",
        "--noise",
        "uniform:0.1",
        "--out",
        noisy.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = eqkit(&[
        "stat-test",
        "--data",
        noisy.to_str().unwrap(),
        "--agents",
        "3",
        "--gamma",
        "0.05",
        "--noise",
        "uniform:0.1",
        "--mc",
        "2000",
        "--seed",
        "7",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    for key in ["phi_star", "tail_probability", "decision"] {
        assert!(v.get(key).is_some(), "missing {}", key);
    }
    assert_eq!(v["decision"], "AcceptH0");
}

#[test]
fn wrong_agent_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", "t,p_1,x_1_1,x_2_1\n1,1,1,1\n");
    let out = eqkit(&["test-nash", "--data", &data, "--agents", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_learning_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let c = configs();
    let out = eqkit(&[
        "simulate-learning",
        "--game",
        c.join("table1-game.json").to_str().unwrap(),
        "--graph",
        c.join("table1-net.json").to_str().unwrap(),
        "--horizon",
        "50",
        "--runs",
        "4",
        "--variant",
        "isolated",
        "--seed",
        "7",
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,mean_d_n,std_d_n"));
    assert_eq!(lines.count(), 50);
}

#[test]
fn run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let c = configs();
    let cfg = serde_json::json!({
        "kind": "learning",
        "seed": 11,
        "game": c.join("table1-game.json"),
        "network": c.join("table1-net.json"),
        "step_size": 0.01,
        "exploration": 0.15,
        "horizon": 200,
        "runs": 5,
        "checkpoint_every": 50
    });
    let path = write(dir.path(), "cfg.json", &cfg.to_string());
    let mut summaries = Vec::new();
    for k in 0..2 {
        let out_dir = dir.path().join(format!("out{}", k));
        let out = eqkit(&["run", "--config", &path, "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        summaries.push(fs::read(out_dir.join("summary.json")).unwrap());
        assert!(out_dir.join("trace.csv").is_file());
        assert!(out_dir.join("trace-isolated.csv").is_file());
    }
    assert_eq!(summaries[0], summaries[1]);
    let v: serde_json::Value = serde_json::from_slice(&summaries[0]).unwrap();
    assert_eq!(v["seed"], 11);
    assert_eq!(v["config"]["horizon"], 200);
    assert!(v["result"]["diffusion_not_worse_fraction"].is_number());
}

#[test]
fn detection_experiment_runs_with_thread_cap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"kind": "detection", "seed": 3, "num_obs": 6, "m_samples": 500, "repetitions": 3}"#;
    let path = write(dir.path(), "det.json", cfg);
    let out_dir = dir.path().join("det");
    let out = Command::new(env!("CARGO_BIN_EXE_eqkit"))
        .args(["run", "--config", &path, "--out", out_dir.to_str().unwrap()])
        .env("EQKIT_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(v["result"]["repetitions"], 3);
    assert_eq!(v["result"]["decision_type_one"], 0.0);

    let out = Command::new(env!("CARGO_BIN_EXE_eqkit"))
        .args(["run", "--config", &path, "--out", out_dir.to_str().unwrap()])
        .env("EQKIT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn short_spsa_run_writes_probes() {
    let dir = tempfile::tempdir().unwrap();
    let probes = dir.path().join("p.csv");
    let out = eqkit(&[
        "optimize-probe",
        "--iters",
        "2",
        "--cost-samples",
        "3",
        "--mc",
        "300",
        "--T",
        "4",
        "--out",
        probes.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["costs"].as_array().unwrap().len(), 2);
    let text = fs::read_to_string(&probes).unwrap();
    assert!(text.starts_with("t,p_1,p_2\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn bundled_configs_parse() {
    for name in ["table1-learning.json", "malicious-detect.json", "malicious-spsa.json"] {
        ExperimentConfig::load(configs().join(name)).unwrap_or_else(|e| panic!("{}: {}", name, e));
    }
}
