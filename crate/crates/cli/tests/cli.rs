use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use halotouch::mpisim::scripts::{
    calibration_session, grid16, grid16_targets, hover_blocks, key_positions, pressure_blocks, typing, Scenario,
};
use halotouch::mpisim::SceneSpec;
use serde_json::Value;

fn halotouch(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halotouch"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("the binary runs")
}

fn ok(out: &Path, args: &[&str]) -> Output {
    let o = halotouch(out, args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn manifest(dir: &Path, command: &str) -> Value {
    let text = fs::read_to_string(dir.join(format!("{command}.manifest.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_outputs_and_is_seed_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    ok(&a, &["--seed", "3", "simulate", "--builtin", "grid16"]);
    ok(&b, &["--seed", "3", "simulate", "--builtin", "grid16"]);
    ok(&c, &["--seed", "4", "simulate", "--builtin", "grid16"]);
    for f in ["stream.htds", "landmarks.csv", "truth.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_ne!(fs::read(a.join("stream.htds")).unwrap(), fs::read(c.join("stream.htds")).unwrap());
    let m = manifest(&a, "simulate");
    assert_eq!(m["seed"], 3);
    assert!(m.to_string().contains("stream.htds"));
}

#[test]
fn missing_scenario_file_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nowhere.json");
    let o = halotouch(tmp.path(), &["simulate", "--scenario", path(&missing)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.json"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(halotouch(tmp.path(), &["frobnicate"]).status.code(), Some(64));
    assert_eq!(halotouch(tmp.path(), &["simulate"]).status.code(), Some(64));
}

#[test]
fn bundled_scenarios_match_the_generators() {
    let scene = SceneSpec::default().with_size(256, 256);
    let text = "the quick brown fox";
    let expected = [
        ("grid16", grid16(0), grid16_targets()),
        ("calibration", calibration_session(45.0, 270.0, true, 0), vec![]),
        ("hover_blocks", hover_blocks(45.0, 270.0), vec![]),
        ("pressure_blocks", pressure_blocks(45.0, 270.0), vec![]),
        ("typing", typing(&key_positions(text), 5.0, 45.0, 270.0), key_positions(text)),
    ];
    let tmp = tempfile::tempdir().unwrap();
    for (name, script, targets) in expected {
        let printed = ok(tmp.path(), &["asset", name]).stdout;
        let want = Scenario { name: name.into(), scene: scene.clone(), script, targets }.to_json() + "\n";
        assert_eq!(String::from_utf8(printed).unwrap(), want, "{name}");
    }
}

#[test]
fn bundled_typing_log_matches_hand_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("log.csv"), ok(dir, &["asset", "typing_log"]).stdout).unwrap();
    fs::write(dir.join("refs.txt"), ok(dir, &["asset", "typing_references"]).stdout).unwrap();
    let log = dir.join("log.csv");
    let refs = dir.join("refs.txt");
    ok(dir, &["eval", "typing", "--log", path(&log), "--references", path(&refs)]);
    let d = &manifest(dir, "eval-typing")["details"];
    let get = |k: &str| d[k].as_f64().unwrap();
    assert!((get("wpm") - 33.793651).abs() < 1e-6, "{d}");
    assert!((get("accuracy") - 0.974321).abs() < 1e-6, "{d}");
    assert_eq!(get("awpm"), get("wpm") * get("accuracy"));
    assert!((get("uer") - 2.0 / 81.0).abs() < 1e-12, "{d}");
    assert!((get("cer") - 3.0 / 81.0).abs() < 1e-12, "{d}");
    assert!(dir.join("typing.csv").exists());
}

fn count_downs(events: &Path) -> usize {
    let mut r = csv::Reader::from_path(events).unwrap();
    let kind = r.headers().unwrap().iter().position(|h| h == "kind").unwrap();
    r.records().filter(|rec| rec.as_ref().unwrap()[kind].eq_ignore_ascii_case("down")).count()
}

#[test]
fn calibrate_run_and_score_a_grid_session() {
    let tmp = tempfile::tempdir().unwrap();
    let (cal, grid, out) = (tmp.path().join("cal"), tmp.path().join("grid"), tmp.path().join("out"));
    ok(&cal, &["simulate", "--builtin", "calibration"]);
    ok(&cal, &[
        "calibrate",
        "--stream",
        path(&cal.join("stream.htds")),
        "--landmarks",
        path(&cal.join("landmarks.csv")),
        "--builtin",
        "calibration",
    ]);
    let profile = cal.join("profile.json");
    assert!(profile.exists() && manifest(&cal, "calibrate")["details"]["fine_tuned"] == true);

    ok(&grid, &["--seed", "7", "simulate", "--builtin", "grid16"]);
    let stream = grid.join("stream.htds");
    let landmarks = grid.join("landmarks.csv");
    let before = (fs::read(&stream).unwrap(), fs::read(&landmarks).unwrap(), fs::read(&profile).unwrap());
    let run = |dir: &Path, stream: &Path, extra: &[&str]| {
        let mut args = vec!["run", "--stream", path(stream), "--landmarks", path(&landmarks), "--profile", path(&cal)];
        args.extend_from_slice(extra);
        halotouch(dir, &args)
    };
    let o = run(&out, &stream, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(count_downs(&out.join("events.csv")), 16);
    // inputs are read, never rewritten
    assert_eq!(before, (fs::read(&stream).unwrap(), fs::read(&landmarks).unwrap(), fs::read(&profile).unwrap()));

    let truth = grid.join("truth.csv");
    ok(&out, &["eval", "touch", "--events", path(&out.join("events.csv")), "--truth", path(&truth)]);
    let d = &manifest(&out, "eval-touch")["details"];
    assert!(d["f1"].as_f64().unwrap() >= 0.99, "{d}");
    assert!(out.join("touch.csv").exists());

    // a profile from another surface still runs, with a warning
    let o = run(&tmp.path().join("wood"), &stream, &["--material", "wood"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));

    // a stream cut mid-frame keeps the frames before the cut and fails
    let bytes = fs::read(&stream).unwrap();
    let cut = tmp.path().join("cut.htds");
    fs::write(&cut, &bytes[..bytes.len() * 2 / 3]).unwrap();
    let partial = tmp.path().join("partial");
    let o = run(&partial, &cut, &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = fs::read_to_string(partial.join("trace.csv")).unwrap().lines().count() - 1;
    let full = fs::read_to_string(out.join("trace.csv")).unwrap().lines().count() - 1;
    assert!(rows > 0 && rows < full, "{rows} of {full}");
}
