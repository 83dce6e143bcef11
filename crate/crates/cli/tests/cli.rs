use std::path::Path;
use std::process::{Command, Output};

use rmpe_cli::output::read_csv;

fn rmpe(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmpe")).args(args).current_dir(dir).env_remove("RMPE_SEED").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const GOOD: &str = r#"{
    "variant": "gapless-int",
    "model": {"random": {"s": 2, "beta": 0.4, "omega": 0.1}},
    "algorithm": {"epsilon": 1e-3, "rho": 0.1},
    "runs": 3,
    "seed": 11
}"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_writes_csv_and_replayable_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "good.json", GOOD);
    let o = rmpe(&["run", &cfg, "--trace", "--out", "out", "--jobs", "2"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&dir.path().join("out/runs.csv")).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.variant == "gapless-int" && r.s == 2 && r.t_max > 0.0));

    // Same seed, same rows up to wall time.
    let o = rmpe(&["run", &cfg, "--out", "again"], dir.path());
    assert_eq!(code(&o), 0);
    let again = read_csv(&dir.path().join("again/runs.csv")).unwrap();
    for (a, b) in rows.iter().zip(&again) {
        assert_eq!((a.seed, a.success, a.t_max, a.t_total), (b.seed, b.success, b.t_max, b.t_total));
    }

    let o = rmpe(&["run", &cfg, "--out", "out", "--append", "--seed", "5"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(read_csv(&dir.path().join("out/runs.csv")).unwrap().len(), 6);

    let trace = dir.path().join("out/traces/run0000.json");
    let o = rmpe(&["replay", trace.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    // Tamper with the recorded factor of the second step.
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    let m = v["steps"][1]["m"].as_f64().unwrap();
    v["steps"][1]["m"] = serde_json::json!(m + 1.0);
    let bad = write(dir.path(), "tampered.json", &v.to_string());
    let o = rmpe(&["replay", &bad], dir.path());
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("step 1"));
}

#[test]
fn seed_env_is_last_resort() {
    let dir = tempfile::tempdir().unwrap();
    let text = GOOD.replace(",\n    \"seed\": 11", "");
    let cfg = write(dir.path(), "noseed.json", &text);
    let seeded = |env: &str, out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_rmpe"))
            .args(["run", &cfg, "--out", out])
            .current_dir(dir.path())
            .env("RMPE_SEED", env)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        read_csv(&dir.path().join(out).join("runs.csv")).unwrap()[0].seed
    };
    let a = seeded("1", "a");
    let b = seeded("2", "b");
    assert_ne!(a, b);
    assert_eq!(a, seeded("1", "c"));
    let o = Command::new(env!("CARGO_BIN_EXE_rmpe"))
        .args(["run", &cfg])
        .current_dir(dir.path())
        .env("RMPE_SEED", "abc")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let omega_ge_beta = GOOD.replace("\"omega\": 0.1", "\"omega\": 0.5");
    let cfg = write(dir.path(), "bad.json", &omega_ge_beta);
    assert_eq!(code(&rmpe(&["run", &cfg], dir.path())), 1);
    let unknown = GOOD.replace("\"runs\": 3", "\"runs\": 3, \"bogus\": 1");
    let cfg = write(dir.path(), "unknown.json", &unknown);
    assert_eq!(code(&rmpe(&["run", &cfg], dir.path())), 1);
    assert_eq!(code(&rmpe(&["run", "missing.json"], dir.path())), 1);
    let cfg = write(dir.path(), "nosweep.json", GOOD);
    assert_eq!(code(&rmpe(&["sweep", &cfg], dir.path())), 1);
}

#[test]
fn infeasible_params_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
        "variant": "gapped-real",
        "model": {"random": {"s": 2, "beta": 0.3, "omega": 0.1, "delta": 0.05}},
        "algorithm": {"epsilon": 1e-3, "rho": 0.1}
    }"#;
    let cfg = write(dir.path(), "inf.json", text);
    let o = rmpe(&["run", &cfg], dir.path());
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sweep_writes_summary_with_fits() {
    let dir = tempfile::tempdir().unwrap();
    let text = GOOD.replace(
        "\"seed\": 11",
        "\"seed\": 11, \"sweep\": {\"axes\": [{\"name\": \"epsilon\", \"values\": [1e-2, 1e-3, 1e-4]}]}",
    );
    let cfg = write(dir.path(), "sweep.json", &text);
    let o = rmpe(&["sweep", &cfg, "--out", "s"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("s/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["points"].as_array().unwrap().len(), 3);
    let fit = &summary["fits"][0];
    assert_eq!(fit["x"], "1/epsilon");
    assert!(fit["slope_T_max"].as_f64().unwrap() > 0.5);
    assert_eq!(read_csv(&dir.path().join("s/runs.csv")).unwrap().len(), 9);
}

#[test]
fn audit_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = rmpe(&["audit", "--which", "lemma-prime", "--trials", "50"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("counterexamples 0"));
    assert_eq!(code(&rmpe(&["audit", "--which", "nope"], dir.path())), 1);
}
