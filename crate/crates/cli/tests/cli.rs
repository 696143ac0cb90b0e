use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use periodauth::data::write_csv_path;
use periodauth::synth::{activity_signal, jump_like};
use periodauth::Activity;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_periodauth");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    data: PathBuf,
    profile: PathBuf,
    config: PathBuf,
}

/// Shared inputs: a jumping and a walking recording, a fast config and an
/// enrolled jumping profile.
fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let data = root.join("data.csv");
        let walk = activity_signal(Activity::Walking, 2).recording("s2", Activity::Walking, 1000, 2).unwrap();
        write_csv_path(&data, &[jump_like(1, 1000).unwrap(), walk]).unwrap();
        let config = root.join("config.json");
        std::fs::write(&config, r#"{"n_sims": 200}"#).unwrap();
        let profile = root.join("profile.json");
        let o = run(&[
            "profile", "init", "--input", s(&data), "--activity", "jumping", "--len", "400", "--user", "ana",
            "--config", s(&config), "--out", s(&profile),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        Fixture {
            _dir: dir,
            root,
            data,
            profile,
            config,
        }
    })
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fit_writes_three_models_and_predict_reads_them() {
    let f = fixture();
    let dir = f.root.join("fit");
    let o = run(&["fit", "--input", s(&f.data), "--activity", "jumping", "--len", "500", "--out", s(&dir)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("period"));
    for a in ["x", "y", "z"] {
        assert!(dir.join(format!("{a}.json")).exists());
    }
    let summary = json(&dir.join("fit.json"));
    assert_eq!(summary["config"]["seed"], 0);
    let out = f.root.join("band.json");
    let o = run(&[
        "predict", "--model", s(&dir.join("y.json")), "--horizon", "30", "--seed", "4", "--config", s(&f.config),
        "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let band = json(&out);
    assert_eq!(band["band"]["yhat"].as_array().unwrap().len(), 30);
    assert_eq!(band["config"]["horizon"], 30);
    assert_eq!(band["seed"], 4);
}

#[test]
fn exit_codes() {
    let f = fixture();
    let missing = run(&["fit", "--input", "/nonexistent.csv", "--out", s(&f.root.join("m"))]);
    assert_eq!(code(&missing), 1);
    assert!(!missing.stderr.is_empty());
    let o = run(&["fit", "--input", s(&f.data), "--activity", "jumping", "--len", "10", "--out", s(&f.root.join("tiny"))]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["energy", "--level", "2"])), 1);
    assert_eq!(code(&run(&["energy", "--sensor", "nope"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    let bad = f.root.join("bad.json");
    std::fs::write(&bad, "[{\"timestamp\": 0, \"kind\": \"thief\"}]").unwrap();
    assert_eq!(code(&run(&["simulate", "--profile", s(&f.profile), "--scenario", s(&bad)])), 1);
}

#[test]
fn crossval_csv_has_a_row_per_block_and_axis() {
    let f = fixture();
    let o = run(&["crossval", "--input", s(&f.data), "--activity", "jumping", "--config", s(&f.config)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "block,axis,mse,rmse,mae,coverage");
    assert_eq!(lines.len(), 16);
    assert!(lines[1].starts_with("1,x,"));
    assert!(lines[15].starts_with("5,z,"));
}

#[test]
fn profile_show_update_and_auth() {
    let f = fixture();
    let shown = run(&["profile", "show", "--profile", s(&f.profile)]);
    assert_eq!(code(&shown), 0);
    let v: Value = serde_json::from_slice(&shown.stdout).unwrap();
    assert_eq!(v["user_id"], "ana");
    assert_eq!(v["entries"][0]["activity"], "jumping");

    // the rest of the same recording continues the training timeline
    let out = f.root.join("auth.json");
    let o = run(&[
        "auth", "--profile", s(&f.profile), "--input", s(&f.data), "--activity", "jumping", "--start", "400",
        "--len", "300", "--t0", "400", "--config", s(&f.config), "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    assert_eq!(v["windows"], 3);
    assert_eq!(v["decisions"][0]["decision"]["verdict"], "accept", "{v}");
    assert_eq!(v["decisions"][2]["start"], 600);

    // a walking window judged by the jumping models is not accepted
    let o = run(&[
        "profile", "update", "--profile", s(&f.profile), "--input", s(&f.data), "--activity", "walking",
        "--len", "100", "--config", s(&f.config),
    ]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));

    let updated = f.root.join("updated.json");
    let o = run(&[
        "profile", "update", "--profile", s(&f.profile), "--input", s(&f.data), "--activity", "jumping",
        "--start", "400", "--len", "100", "--t0", "400", "--config", s(&f.config), "--out", s(&updated),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&updated);
    assert_eq!(v["profile"]["entries"][0]["observation_count"], 9);
    assert_eq!(v["profile"]["entries"][0]["buffer"]["t"].as_array().unwrap().len(), 500);
}

#[test]
fn simulate_owner_impostor_and_empty() {
    let f = fixture();
    let scenario = |name: &str, kind: &str, n: usize| {
        let p = f.root.join(name);
        let steps: Vec<String> = (0..n)
            .map(|i| format!("{{\"timestamp\": {}, \"kind\": \"{kind}\"}}", 2 * i))
            .collect();
        std::fs::write(&p, format!("[{}]", steps.join(","))).unwrap();
        p
    };
    let sim = |sc: &Path| {
        let o = run(&["simulate", "--profile", s(&f.profile), "--scenario", s(sc), "--config", s(&f.config)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        serde_json::from_slice::<Value>(&o.stdout).unwrap()
    };
    let owner = sim(&scenario("owner.json", "owner", 20));
    let t = &owner["replay"]["totals"];
    assert!(t["accept_rate"].as_f64().unwrap() >= 0.9, "{t}");
    assert!(t["average_ua"].as_f64().unwrap() < 25.9, "{t}");

    let impostor = sim(&scenario("impostor.json", "impostor", 5));
    assert!(impostor["replay"]["totals"]["lockdown_step"].as_u64().unwrap() < 3);

    let empty = sim(&scenario("empty.json", "owner", 0));
    let t = &empty["replay"]["totals"];
    assert_eq!(t["steps"], 0);
    assert_eq!(t["average_ua"], 0.0);
    assert_eq!(t["charge_uas"], 0.0);
}

#[test]
fn energy_table() {
    let o = run(&["energy", "--duty", "0.1"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v["schedules"].as_array().unwrap();
    let avg = |name: &str| {
        rows.iter().find(|r| r["schedule"] == name).unwrap()["estimate"]["average_ua"].as_f64().unwrap()
    };
    assert_eq!(avg("lockdown"), 250.0);
    assert!((avg("custom") - 25.9).abs() < 1e-9);
    assert!(avg("lockdown") > avg("regular"));
}
