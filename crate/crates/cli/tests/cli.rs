use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn peerfx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peerfx"))
        .args(args)
        .env_remove("PEERFX_THREADS")
        .output()
        .expect("spawn peerfx")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn simulate_engagement(dir: &Path) {
    ok(&peerfx(&["simulate", "--out", s(dir), "--n-players", "600", "--seed", "11"]));
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        ok(&peerfx(&[
            "simulate", "--mode", "two-player-reflection", "--beta", "0.5", "--seed", "7", "--n-players", "300", "--out", s(d),
        ]));
    }
    for f in ["panel.csv", "truth.json", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let truth = read_json(&a.join("truth.json"));
    assert_eq!(truth["config"]["seed"], 7);
    assert!((truth["ols_plim"].as_f64().unwrap() - 0.8).abs() < 1e-12);
    let header = fs::read_to_string(a.join("panel.csv")).unwrap().lines().next().unwrap().to_string();
    assert!(header.contains("intensity") && !header.contains("party_id"), "{header}");
}

#[test]
fn explosive_reflection_is_a_configuration_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = peerfx(&["simulate", "--mode", "two-player-reflection", "--beta", "1.5", "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(5));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("spectral radius"), "{err}");
    assert!(!tmp.path().join("panel.csv").exists());
}

#[test]
fn estimate_writes_both_estimators_attrition_and_first_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let (sim, est) = (tmp.path().join("sim"), tmp.path().join("est"));
    simulate_engagement(&sim);
    ok(&peerfx(&["estimate", "--input", s(&sim.join("panel.csv")), "--out", s(&est)]));
    let rep = read_json(&est.join("estimate.json"));
    let fits = rep["fits"].as_array().unwrap();
    assert_eq!(fits.len(), 2);
    for fit in fits {
        assert!(fit["tsls"]["beta"].is_array());
        assert!(fit["ols"]["beta"].is_array());
        assert!(fit["attrition"].is_object());
        assert_eq!(fit["tsls"]["first_stage"].as_array().unwrap().len(), 4);
    }
    for f in ["table.txt", "first_stage.csv", "effects.csv", "manifest.json"] {
        assert!(est.join(f).exists(), "{f}");
    }
    let rep_dir = tmp.path().join("rep");
    ok(&peerfx(&["report", "--input", s(&est.join("estimate.json")), "--out", s(&rep_dir)]));
    for f in ["table.txt", "first_stage.csv", "effects.csv"] {
        assert_eq!(fs::read(est.join(f)).unwrap(), fs::read(rep_dir.join(f)).unwrap(), "{f} after JSON round trip");
    }

    let manifest = read_json(&est.join("manifest.json"));
    let input_digest = &manifest["inputs"][0]["sha256"];
    let sim_manifest = read_json(&sim.join("manifest.json"));
    let panel_digest = sim_manifest["outputs"].as_array().unwrap().iter().find(|o| o["path"] == "panel.csv").unwrap();
    assert_eq!(input_digest, &panel_digest["sha256"]);
}

#[test]
fn party_split_without_party_column_is_a_schema_error() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    ok(&peerfx(&["simulate", "--mode", "two-player", "--n-players", "200", "--out", s(&sim)]));
    let out = peerfx(&[
        "estimate", "--input", s(&sim.join("panel.csv")), "--scheme", "party-split", "--out", s(&tmp.path().join("e")),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn cluster_errors_differ_from_hc1() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    simulate_engagement(&sim);
    let mut se = Vec::new();
    for vcov in ["hc1", "cluster-player"] {
        let dir = tmp.path().join(vcov);
        ok(&peerfx(&["estimate", "--input", s(&sim.join("panel.csv")), "--vcov", vcov, "--outcome", "engagement", "--out", s(&dir)]));
        let rep = read_json(&dir.join("estimate.json"));
        let fit = &rep["fits"][0]["tsls"];
        let v: Vec<f64> = fit["se"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        let b: Vec<f64> = fit["beta"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        se.push((b, v));
    }
    assert_eq!(se[0].0, se[1].0, "point estimates must not depend on the covariance choice");
    let max_rel = se[0].1.iter().zip(&se[1].1).map(|(a, b)| ((a - b) / a).abs()).fold(0.0, f64::max);
    assert!(max_rel > 0.01, "max relative SE difference {max_rel}");
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    simulate_engagement(&sim);
    let one = tmp.path().join("one");
    ok(&peerfx(&["--threads", "1", "estimate", "--input", s(&sim.join("panel.csv")), "--out", s(&one)]));
    let two = tmp.path().join("two");
    let out = Command::new(env!("CARGO_BIN_EXE_peerfx"))
        .args(["estimate", "--input", s(&sim.join("panel.csv")), "--out", s(&two)])
        .env("PEERFX_THREADS", "3")
        .output()
        .unwrap();
    ok(&out);
    assert_eq!(fs::read(one.join("estimate.json")).unwrap(), fs::read(two.join("estimate.json")).unwrap());
}

#[test]
fn config_file_is_overridden_by_flags_and_rejects_unknown_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# two-player run\nmode = two_player_reflection\nn_players = 100\nseed = 1\n").unwrap();
    let out = tmp.path().join("sim");
    ok(&peerfx(&["simulate", "--config", s(&cfg), "--seed", "9", "--out", s(&out)]));
    let truth = read_json(&out.join("truth.json"));
    assert_eq!(truth["config"]["seed"], 9);
    assert_eq!(truth["config"]["n_players"], 100);
    assert_eq!(truth["config"]["mode"], "two_player_reflection");

    fs::write(&cfg, "sede = 3\n").unwrap();
    let bad = peerfx(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("sede"));

    fs::write(&cfg, "n_players = lots\n").unwrap();
    assert_eq!(peerfx(&["simulate", "--config", s(&cfg), "--out", s(&out)]).status.code(), Some(5));
}

#[test]
fn describe_and_report_render() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    simulate_engagement(&sim);
    let panel = sim.join("panel.csv");
    let d = peerfx(&["describe", "--input", s(&panel), "--format", "csv"]);
    ok(&d);
    let text = String::from_utf8_lossy(&d.stdout);
    assert!(text.contains("opponents") && text.contains("teammates"), "{text}");

    let (a, b) = (tmp.path().join("opp"), tmp.path().join("party"));
    ok(&peerfx(&["estimate", "--input", s(&panel), "--out", s(&a)]));
    ok(&peerfx(&["estimate", "--input", s(&panel), "--scheme", "party_split", "--out", s(&b)]));
    let rep_dir = tmp.path().join("report");
    let r = peerfx(&[
        "report",
        "--input",
        s(&a.join("estimate.json")),
        s(&b.join("estimate.json")),
        "--rank",
        "engagement",
        "--contexts",
        "opponents,different_party,same_party",
        "--out",
        s(&rep_dir),
    ]);
    ok(&r);
    let ranking = fs::read_to_string(rep_dir.join("ranking_time_to_next_match.txt")).unwrap();
    assert_eq!(ranking.lines().filter(|l| l.contains(", loss") || l.contains(", win")).count(), 6, "{ranking}");
    assert!(!ranking.contains("teammates"));
}

#[test]
fn missing_input_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = peerfx(&["estimate", "--input", s(&tmp.path().join("nope.csv")), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(8));
}

#[test]
fn malformed_panel_is_rejected_with_schema_or_validation_code() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("bad.csv");
    fs::write(&p, "match_id,player_id\nm1,a\n").unwrap();
    let out = peerfx(&["describe", "--input", s(&p)]);
    assert_eq!(out.status.code(), Some(3));
    let out_dir = tmp.path().join("o");
    fs::write(&p, "match_id,player_id,team_id,match_start,match_end,used_toxic,result\nm1,a,0,10,5,0,win\nm1,b,1,10,5,1,loss\n").unwrap();
    let out = peerfx(&["estimate", "--input", s(&p), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}
