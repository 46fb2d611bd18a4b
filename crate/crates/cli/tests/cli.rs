use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uipt-lab"))
        .args(args)
        .env_remove("UIPT_LAB_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = lab(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn hull_gf_at_r0_is_s() {
    let v = json(&["law", "hull-gf", "--r", "0", "--s", "0.7"]);
    assert_eq!(v["schema"], "uipt-lab/1");
    assert_eq!(v["op"], "law hull-gf");
    assert_eq!(v["value"].as_f64(), Some(0.7));
}

#[test]
fn hull_gf_at_s1_is_one() {
    let v = json(&["law", "hull-gf", "--r", "3", "--s", "1"]);
    assert_eq!(v["value"].as_f64(), Some(1.0));
}

#[test]
fn sample_hull_is_byte_identical() {
    let base = ["sample", "hull", "--r", "2", "--trials", "1000", "--seed", "42"];
    let a = lab(&base);
    assert!(a.status.success());
    let b = lab(&base);
    assert_eq!(a.stdout, b.stdout);
    for w in ["1", "3"] {
        let mut args = base.to_vec();
        args.extend(["--workers", w]);
        assert_eq!(lab(&args).stdout, a.stdout, "workers {w}");
    }
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["samples"].as_array().unwrap().len(), 1000);
}

#[test]
fn csv_echoes_config_and_parses() {
    let out = lab(&["law", "perimeter", "--r", "1", "--q-max", "5", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let cfg = lines.next().unwrap().strip_prefix("# ").expect("config line");
    let cfg: Value = serde_json::from_str(cfg).unwrap();
    assert_eq!(cfg["params"]["q_max"], 5);
    assert_eq!(lines.next(), Some("k,probability"));
    let probs: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(probs.len(), 5);
    assert!((probs[0] - 0.125).abs() < 1e-12);
}

#[test]
fn exact_mode_prints_rationals() {
    let v = json(&["law", "perimeter", "--r", "1", "--q-max", "2", "--precision", "exact"]);
    assert_eq!(v["pmf"][0]["probability"], "1/8");
    assert_eq!(v["pmf"][1]["probability"], "9/64");
    let v = json(&["gf", "theta", "--order", "1", "--precision", "exact"]);
    assert_eq!(v["pmf"][0]["probability"], "3/4");
    assert_eq!(v["pmf"][1]["probability"], "1/8");
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["law", "hull-gf", "--r", "1", "--s", "1.5"][..],
        &[
            "law", "slice-gf", "--r", "1", "--q", "3", "--arcs", "1,1", "--s", "0.5,0.5",
        ],
        &["law", "hull-gf", "--r", "1", "--s", "0.5", "--precision", "exact"],
        &["law", "hull-gf", "--r", "1", "--s", "0.5", "--bogus"],
        &["nothing"],
    ] {
        let out = lab(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn slices_match_exact_gf_loosely() {
    let v = json(&[
        "sample", "slices", "--r", "2", "--q", "4", "--arcs", "1,3", "--s", "0.9,0.95", "--trials", "2000",
    ]);
    let gf = &v["gf"];
    let z = gf["z"].as_f64().unwrap();
    assert!(z.abs() < 4.0, "z = {z}");
    assert_eq!(v["samples"][0].as_object().unwrap().len(), 6);
}

#[test]
fn cache_round_trips() {
    let dir = std::env::temp_dir().join(format!("uipt-lab-cache-{}", std::process::id()));
    let run = |order: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_uipt-lab"))
            .args(["gf", "boundary", "--p", "2", "--order", order, "--precision", "exact"])
            .env("UIPT_LAB_CACHE_DIR", &dir)
            .output()
            .unwrap();
        assert!(out.status.success());
        serde_json::from_slice::<Value>(&out.stdout).unwrap()
    };
    let long = run("8");
    assert!(dir.join("boundary_2.json").exists());
    let short = run("4");
    assert_eq!(
        long["coefficients"].as_array().unwrap()[..5],
        short["coefficients"].as_array().unwrap()[..]
    );
    assert_eq!(short["coefficients"][1]["coefficient"], "3/1");
    std::fs::remove_dir_all(dir).ok();
}
