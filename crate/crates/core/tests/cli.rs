use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use seamless_core::cli::Config;

fn seamless(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seamless"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = r#"{
  "design": {
    "doses": [
      {"label": "2-4", "ketamine": 2.0, "dexmedetomidine": 4.0},
      {"label": "3-3", "ketamine": 3.0, "dexmedetomidine": 3.0},
      {"label": "4-2", "ketamine": 4.0, "dexmedetomidine": 2.0}
    ],
    "comparator_fraction": 0.4,
    "drop_threshold": 0.05,
    "ni_margin": 0.178,
    "lambda1": 0.037,
    "lambda2": 0.608,
    "schedule": {"analysis_points": [150, 200, 250, 300, 350], "total_n": 410},
    "priors": {
      "comparator": {"alpha": 15.6, "beta": 0.44},
      "novel_direct": {"alpha": 6.25, "beta": 0.25},
      "interim_arm": {"alpha": 6.25, "beta": 0.25},
      "under_intercept": {"location": -2.9444389791664403, "scale": 31.622776601683796, "degrees_of_freedom": 1.0},
      "under_slope_a": {"location": 0.0, "scale": 31.622776601683796, "degrees_of_freedom": 1.0},
      "under_slope_b": {"location": 0.0, "scale": 31.622776601683796, "degrees_of_freedom": 1.0},
      "over_intercept": {"location": -3.8918202981106265, "scale": 31.622776601683796, "degrees_of_freedom": 1.0},
      "over_slope_a": {"location": 0.0, "scale": 31.622776601683796, "degrees_of_freedom": 1.0},
      "over_slope_b": {"location": 0.0, "scale": 31.622776601683796, "degrees_of_freedom": 1.0}
    },
    "sampler": {"n_draws": 300, "n_burnin": 300, "n_chains": 1, "proposal_scale": 1.0, "adapt": true, "seed": 1}
  },
  "alc": {"zeta": 0.07, "n_grid": [350, 400], "r0_grid": [0.3, 0.4], "replicates": 20, "posterior_draws": 200},
  "gamma": {"gamma_grid": [0.05, 0.1], "replicates": 20},
  "run": {"seed": 99, "replicates": 4}
}"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn validate_accepts_defaults_and_small_config() {
    let out = seamless(&["validate"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("config digest"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = seamless(&["validate", "--config", path(&cfg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_zeta_exits_2_and_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"alc": {"n_grid": [350], "r0_grid": [0.4], "replicates": 5, "posterior_draws": 5}}"#,
    );
    let out = seamless(&["alc", "--config", path(&cfg), "--out", path(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("zeta"), "{err}");
    assert!(err.contains("line"), "{err}");
}

#[test]
fn invalid_design_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("\"lambda1\": 0.037", "\"lambda1\": 0.7"));
    let out = seamless(&["validate", "--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_exits_2() {
    assert_eq!(seamless(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn no_qualifying_design_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("\"zeta\": 0.07", "\"zeta\": 0.000001"));
    let out = seamless(&["alc", "--config", path(&cfg), "--out", path(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = seamless(&["gamma", "--replicates", "2", "--out", path(&blocker.join("sub"))]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn echo_round_trips_and_digest_matches_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("o");
    let out = seamless(&["gamma", "--config", path(&cfg), "--out", path(&out_dir), "--seed", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let echo = fs::read_to_string(out_dir.join("config.json")).unwrap();
    let parsed = Config::from_json(&echo).unwrap();
    assert_eq!(parsed.run.seed, 5);
    assert_eq!(parsed.echo(), echo);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_digest"], parsed.digest());
    assert_eq!(manifest["command"], "gamma");
    let csv = fs::read_to_string(out_dir.join("gamma.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("schema_version,seed,config_digest,gamma,"));
    for line in lines {
        assert!(line.starts_with(&format!("1,5,{}", parsed.digest())));
    }
}

#[test]
fn entropy_seed_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("o");
    let out = seamless(&["gamma", "--config", path(&cfg), "--out", path(&out_dir), "--entropy-seed"]);
    assert!(out.status.success());
    let echo = Config::from_json(&fs::read_to_string(out_dir.join("config.json")).unwrap()).unwrap();
    let csv = fs::read_to_string(out_dir.join("gamma.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with(&format!("1,{},", echo.run.seed)));
    let both = seamless(&["gamma", "--seed", "1", "--entropy-seed"]);
    assert_eq!(both.status.code(), Some(2));
}

#[test]
fn simulate_single_replicate_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut files = Vec::new();
    for name in ["a", "b"] {
        let o = dir.path().join(name);
        let out = seamless(&[
            "simulate", "--config", path(&cfg), "--out", path(&o), "--replicates", "1", "--scenario", "2",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        files.push(fs::read(o.join("trials.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let text = String::from_utf8(files[0].clone()).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().contains(",2,0,"));
}

#[test]
fn simulate_unknown_scenario_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = seamless(&["simulate", "--config", path(&cfg), "--out", path(&dir.path().join("o")), "--scenario", "zz"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn interim_requests() {
    let dir = tempfile::tempdir().unwrap();
    let req = dir.path().join("req.json");
    let run = |body: &str| {
        fs::write(&req, body).unwrap();
        let o = dir.path().join("o");
        let out = seamless(&["interim", "--request", path(&req), "--out", path(&o)]);
        (out, o)
    };

    let (out, o) = run(r#"{"counts": {"arm_counts": [[0,0,0],[0,0,0],[0,0,0]], "comparator_successes": 0, "comparator_failures": 0}, "period": 1}"#);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rec: serde_json::Value = serde_json::from_str(&fs::read_to_string(o.join("interim.json")).unwrap()).unwrap();
    assert_eq!(rec["period"], 2);
    for p in rec["post_drop_probs"].as_array().unwrap() {
        assert!((p.as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-9);
    }

    let (out, o) = run(r#"{"counts": {"arm_counts": [[30,20,10],[1,200,1],[25,30,5]], "comparator_successes": 90, "comparator_failures": 3}, "period": 3}"#);
    assert!(out.status.success());
    let rec: serde_json::Value = serde_json::from_str(&fs::read_to_string(o.join("interim.json")).unwrap()).unwrap();
    assert_eq!(rec["post_drop_probs"], serde_json::json!([0.0, 1.0, 0.0]));
    assert_eq!(rec["dropped_flags"], serde_json::json!([true, false, true]));

    let (out, _) = run(r#"{"counts": {"arm_counts": [[0,0,0],[0,0,0]], "comparator_successes": 0, "comparator_failures": 0}, "period": 1}"#);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn outputs_are_thread_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut tables = Vec::new();
    for threads in ["1", "3"] {
        let o = dir.path().join(threads);
        let out = seamless(&["oc", "--config", path(&cfg), "--out", path(&o), "--threads", threads]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        tables.push(fs::read(o.join("oc.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
}
