use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sgld(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgld"))
        .args(args)
        .output()
        .expect("sgld binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const SMALL: &str = r#"{
  "problem": {"name": "gaussian", "params": {"dim": 1}},
  "stream": {"family": "ar1_bounded", "innovation_bound": 1.0, "correlation": 0.5},
  "sgld": {"step_size": 0.1, "horizon": 50, "ensemble": 20, "seed": 5, "thin": 10},
  "experiment": {
    "rate_study": {"lambdas": [0.2, 0.1], "diffusion_time": 5.0, "ensemble": 400, "batches": 10, "min_slope": MIN_SLOPE},
    "moment_check": {"lambdas": [0.1], "checkpoints": [5, 50], "ensemble": 400}
  }
}"#;

#[test]
fn usage_and_config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(sgld(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(sgld(&["rate-study"]).status.code(), Some(2));
    let bad = write_config(dir.path(), "bad.json", "{\"problem\": 3}");
    assert_eq!(sgld(&["--config", bad.to_str().unwrap(), "constants"]).status.code(), Some(2));
    let steep = write_config(
        dir.path(),
        "steep.json",
        &SMALL.replace("[0.2, 0.1]", "[0.9, 0.1]").replace("MIN_SLOPE", "0.0"),
    );
    let o = sgld(&["--config", steep.to_str().unwrap(), "rate-study"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambda_max"));
}

#[test]
fn failed_check_exits_with_one_and_still_writes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "strict.json", &SMALL.replace("MIN_SLOPE", "50.0"));
    let out = dir.path().join("rate.csv");
    let o = sgld(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "rate-study"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL loglog_slope"));
    let csv = std::fs::read_to_string(out).unwrap();
    assert!(csv.starts_with("# {\"command\":\"rate-study\",\"config_sha256\":\""));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn passing_study_exits_with_zero_and_seed_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ok.json", &SMALL.replace("MIN_SLOPE", "0.0"));
    let a = sgld(&["--config", cfg.to_str().unwrap(), "moment-check"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = sgld(&["--config", cfg.to_str().unwrap(), "--seed", "6", "--threads", "2", "moment-check"]);
    let (ta, tb) = (String::from_utf8_lossy(&a.stdout), String::from_utf8_lossy(&b.stdout));
    assert!(ta.lines().next().unwrap().ends_with("\"seed\":5}"));
    assert!(tb.lines().next().unwrap().ends_with("\"seed\":6}"));
    assert_ne!(ta.lines().nth(2), tb.lines().nth(2));
}

#[test]
fn simulate_reference_and_w1_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ok.json", &SMALL.replace("MIN_SLOPE", "0.0"));
    let (sim, reference) = (dir.path().join("sim.csv"), dir.path().join("ref.csv"));
    let c = cfg.to_str().unwrap();
    assert!(sgld(&["--config", c, "--out", sim.to_str().unwrap(), "simulate"]).status.success());
    assert!(sgld(&["--config", c, "--out", reference.to_str().unwrap(), "reference", "--count", "20"])
        .status
        .success());
    let sim_text = std::fs::read_to_string(&sim).unwrap();
    assert_eq!(sim_text.lines().nth(1), Some("chain_id,step,theta_0"));
    // 20 chains, steps 0, 10, ..., 50.
    assert_eq!(sim_text.lines().count(), 2 + 20 * 6);
    let o = sgld(&["w1", "--a", sim.to_str().unwrap(), "--b", reference.to_str().unwrap(), "--p", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    let row: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(&row[..2], &["W2", "exact_1d"]);
    assert!(row[2].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn w1_in_the_plane_uses_matching_or_sliced() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_config(dir.path(), "a.csv", "0,0\n1,1\n");
    let b = write_config(dir.path(), "b.csv", "3,4\n4,5\n");
    let (a, b) = (a.to_str().unwrap(), b.to_str().unwrap());
    let exact = String::from_utf8(sgld(&["w1", "--a", a, "--b", b]).stdout).unwrap();
    assert_eq!(exact.lines().nth(2), Some("W1,matching,5,"));
    let sliced = String::from_utf8(sgld(&["w1", "--a", a, "--b", b, "--sliced", "16", "--seed", "1"]).stdout).unwrap();
    assert!(sliced.lines().nth(2).unwrap().starts_with("sliced_W1,sliced,"));
    assert_eq!(sgld(&["w1", "--a", a, "--b", b, "--p", "2"]).status.code(), Some(2));
    assert_eq!(sgld(&["w1", "--a", a, "--b", b, "--p", "3"]).status.code(), Some(2));
}

#[test]
fn constants_report_is_json_with_meta() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ok.json", &SMALL.replace("MIN_SLOPE", "0.0"));
    let o = sgld(&["--config", cfg.to_str().unwrap(), "constants"]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["meta"]["command"], "constants");
    assert_eq!(doc["report"]["theorem"]["lambda_max"], 0.25);
    assert!(doc["report"]["theorem"]["C2"].as_f64().unwrap() > 0.0);
}
