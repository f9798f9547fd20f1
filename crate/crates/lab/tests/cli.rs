use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_composed-lab"))
        .args(args)
        .env("COMPOSED_LAB_THREADS", "2")
        .output()
        .expect("running composed-lab")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn norms_on_example_staircase() {
    let o = lab(&["norms", "--spec", s(&fixture("rounding5.json"))]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let header = rows.headers().unwrap().clone();
    let row = rows.records().next().unwrap().unwrap();
    let get = |k: &str| row.get(header.iter().position(|h| h == k).unwrap()).unwrap().to_string();
    assert_eq!(get("id"), "rounding5");
    assert_eq!(get("lower").parse::<f64>().unwrap(), 8.0);
    assert!((get("measured").parse::<f64>().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(get("within_bound"), "true");
    assert_eq!(get("grid_mismatches"), "0");
}

#[test]
fn usage_and_config_errors_have_distinct_codes() {
    assert_eq!(lab(&["norms", "--no-such-flag"]).status.code(), Some(64));
    assert_eq!(lab(&["no-such-command"]).status.code(), Some(64));
    let bad = lab(&["norms", "--delta", "2"]);
    assert_eq!(bad.status.code(), Some(65));
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("error:"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"not_a_key": 1}"#).unwrap();
    assert_eq!(lab(&["train-staircase", "--config", s(&cfg)]).status.code(), Some(65));
    assert_eq!(lab(&["norms", "--spec", "/nonexistent.json"]).status.code(), Some(65));
    assert_eq!(lab(&["--help"]).status.code(), Some(0));
}

#[test]
fn check_exit_code_follows_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let tests = dir.path().join("tests.json");
    fs::write(&tests, r#"[{"stdin": "", "stdout": "7"}]"#).unwrap();
    let run = |code: &str| {
        let file = dir.path().join("p.cpp");
        fs::write(&file, code).unwrap();
        lab(&["sanstype", "check", s(&file), "--tests", s(&tests)]).status.code()
    };
    assert_eq!(run("int main () {\n  int var_1 = 7;\n  cout << var_1;\n  return 0; }\n"), Some(0));
    assert_eq!(run("int main () {\n  int var_1 = 6;\n  cout << var_1;\n  return 0; }\n"), Some(1));
    assert_eq!(run("int main () {\n  var_1 = 7;\n  cout << var_1;\n  return 0; }\n"), Some(2));
}

#[test]
fn corrupt_then_check_fails_to_compile() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.cpp");
    fs::write(&file, "int main () {\n  int var_1 = 3;\n  cout << var_1;\n  return 0; }\n").unwrap();
    let o = lab(&["sanstype", "corrupt", s(&file), "--kind", "drop_cout"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "int main () {\n  int var_1 = 3;\n  << var_1;\n  return 0; }\n");
    fs::write(&file, stdout(&o)).unwrap();
    let tests = dir.path().join("t.json");
    fs::write(&tests, r#"{"stdin": "", "stdout": "3"}"#).unwrap();
    assert_eq!(lab(&["sanstype", "check", s(&file), "--tests", s(&tests)]).status.code(), Some(2));
}

#[test]
fn reinforce_check_passes_on_small_space() {
    let o = lab(&["reinforce-check", "--space", "4", "--instances", "5", "--samples", "50000"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pass"], true);
    assert!(v["max_z_score"].as_f64().unwrap() < 3.0);
}

#[test]
fn gen_is_reproducible() {
    let a = lab(&["sanstype", "gen", "--seed", "5", "--n", "30"]);
    let b = lab(&["sanstype", "gen", "--seed", "5", "--n", "30"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 30);
    let first: serde_json::Value = serde_json::from_str(stdout(&a).lines().next().unwrap()).unwrap();
    for key in ["id", "pseudocode", "code", "tests"] {
        assert!(first.get(key).is_some(), "{key}");
    }
}

#[test]
fn dataset_writes_manifest_and_handles_empty_splits() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let o = lab(&[
        "--out", s(&out), "sanstype", "dataset", "--labeled", "0", "--unlabeled", "4", "--test", "0", "--ood-test", "0",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    assert_eq!(fs::read_to_string(out.join("train.jsonl")).unwrap(), "");
    assert_eq!(fs::read_to_string(out.join("unlabeled.jsonl")).unwrap().lines().count(), 4);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    for key in ["command", "args", "config", "seed", "versions", "threads", "outputs", "wall_time_secs", "timestamp"] {
        assert!(m.get(key).is_some(), "{key}");
    }
    assert_eq!(m["threads"], 2);
    assert!(m["outputs"].as_array().unwrap().iter().any(|o| o == "denoising.jsonl"));
    assert!(lab(&["sanstype", "dataset"]).status.code() == Some(64));
}

#[test]
fn staircase_run_is_deterministic_and_reportable() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = lab(&[
            "--out", s(&out), "train-staircase", "--seeds", "2", "--epochs", "200", "--hidden", "16",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["report.json", "seeds.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert!(a.join("manifest.json").exists());
    let seeds = fs::read_to_string(a.join("seeds.csv")).unwrap();
    assert!(seeds.starts_with("arm,seed,mse_train"));
    assert_eq!(seeds.lines().count(), 1 + 2 * 4);

    let norms = dir.path().join("n");
    assert_eq!(lab(&["--out", s(&norms), "norms"]).status.code(), Some(0));
    let o = lab(&["report", s(&a.join("report.json")), s(&norms.join("norms.json"))]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = stdout(&o);
    assert!(summary.starts_with("source,experiment,group,metric,n,median,min,max"));
    assert!(summary.contains("composed_vs_standard"));
    assert!(summary.contains("norms.json"));
}
