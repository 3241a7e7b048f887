use std::fs;
use std::path::Path;

use ltlab_cli::{run, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};
use ltlab_core::ltcheck::LtReport;
use ltlab_core::PotentialSpec;

fn ltlab(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("ltlab").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_spec(dir: &Path, name: &str, spec: &PotentialSpec) -> String {
    let path = dir.join(name);
    fs::write(&path, spec.to_json_string()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn constants_prints_named_values() {
    let (code, out, _) = ltlab(&["constants", "--d", "1", "--gamma", "1"]);
    assert_eq!(code, EXIT_PASS);
    assert!(out.contains("Lcl=0.2122066"), "{out}");
    assert!(out.contains("bound=0.3849002"), "{out}");
}

#[test]
fn constants_json_parses() {
    let (code, out, _) = ltlab(&["constants", "--d", "3", "--gamma", "1.5", "--json"]);
    assert_eq!(code, EXIT_PASS);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["entry"]["d"], 3);
    assert!(v["named"]["R"].as_f64().unwrap() > 1.81);
}

#[test]
fn check_pt2_passes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "pt2.json", &PotentialSpec::poschl_teller(2.0, 1.0));
    let (code, out, err) = ltlab(&["check", "--spec", &spec, "--gamma", "1", "--json"]);
    assert_eq!(code, EXIT_PASS, "{err}");
    let reports: Vec<LtReport> = serde_json::from_str(&out).unwrap();
    assert_eq!(reports.len(), 1);
    assert!((reports[0].ratio - 0.21658).abs() < 1e-5);
}

#[test]
fn check_several_gammas_as_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "pt1.json", &PotentialSpec::poschl_teller(1.0, 1.0));
    let (code, out, _) = ltlab(&["check", "--spec", &spec, "--gamma", "1,1.5,2", "--h", "0.02", "--csv"]);
    assert_eq!(code, EXIT_PASS);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "spec,d,gamma,lhs,rhs,constant,ratio,pass");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.ends_with(",true")));
}

#[test]
fn check_separable_two_dimensional() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_spec(dir.path(), "a.json", &PotentialSpec::poschl_teller(1.0, 1.0));
    let b = write_spec(dir.path(), "b.json", &PotentialSpec::poschl_teller(2.0, 1.0));
    let (code, out, err) = ltlab(&["check", "--spec", &a, "--d", "2", "--sep", &b, "--h", "0.02"]);
    assert_eq!(code, EXIT_PASS, "{err}");
    assert!(out.contains("poschl_teller+poschl_teller"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(ltlab(&["check", "--bogus"]).0, EXIT_USAGE);
    assert_eq!(ltlab(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(ltlab(&[]).0, EXIT_USAGE);
    let (code, _, err) = ltlab(&["check", "--spec", "/nonexistent/spec.json"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("cannot read"));
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "pt.json", &PotentialSpec::poschl_teller(1.0, 1.0));
    assert_eq!(ltlab(&["check", "--spec", &spec, "--d", "2"]).0, EXIT_USAGE);
    assert_eq!(ltlab(&["check", "--spec", &spec, "--gamma", "0.5"]).0, EXIT_USAGE);
}

#[test]
fn help_is_not_an_error() {
    let (code, out, _) = ltlab(&["--help"]);
    assert_eq!(code, EXIT_PASS);
    assert!(out.contains("campaign"));
}

#[test]
fn sobolev_random_passes() {
    let (code, out, err) = ltlab(&["sobolev", "--random", "--N", "5", "--M", "2", "--seed", "3", "--h", "0.02"]);
    assert_eq!(code, EXIT_PASS, "{err}");
    assert!(out.trim_end().ends_with("PASS"));
}

#[test]
fn sobolev_gaussian_json() {
    let (code, out, _) = ltlab(&["sobolev", "--gaussian", "--L", "10", "--h", "0.001", "--json"]);
    assert_eq!(code, EXIT_PASS);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["lhs"].as_f64().unwrap() - 0.183776).abs() < 1e-6);
    assert!((v["agmon"]["integral"].as_f64().unwrap() - 0.564190).abs() < 1e-6);
    assert!(v["meta"]["gram_defect"].as_f64().unwrap() < 1e-12);
}

#[test]
fn sobolev_needs_a_source() {
    assert_eq!(ltlab(&["sobolev"]).0, EXIT_USAGE);
}

#[test]
fn sweep_and_extremal() {
    let (code, out, _) = ltlab(&["sweep", "--family", "pt", "--points", "10", "--h", "0.02", "--csv"]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(out.lines().count(), 11);
    let (code, out, _) = ltlab(&["extremal", "--family", "pt", "--gamma", "1", "--budget", "80", "--h", "0.02", "--json"]);
    assert_eq!(code, EXIT_PASS);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["best_ratio"].as_f64().unwrap() - 0.24503).abs() < 1e-3);
    assert!(!v["trace"].as_array().unwrap().is_empty());
}

#[test]
fn out_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("constants.txt");
    let (code, out, _) = ltlab(&["constants", "--out", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_PASS);
    assert!(out.is_empty());
    assert!(fs::read_to_string(path).unwrap().contains("c_thm1="));
}

#[test]
fn campaign_is_deterministic_and_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    write_spec(dir.path(), "pt2.json", &PotentialSpec::poschl_teller(2.0, 1.0));
    let cfg = dir.path().join("campaign.json");
    fs::write(
        &cfg,
        r#"{"jobs":[{"spec_file":"pt2.json","gamma":[1,2],"h":0.05},
                    {"random":{"M":3,"count":4},"h":0.05}],
            "format":"json","seed":9}"#,
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let (code, first, err) = ltlab(&["campaign", "--config", cfg, "--workers", "1"]);
    assert_eq!(code, EXIT_PASS, "{err}");
    let (_, second, _) = ltlab(&["campaign", "--config", cfg, "--workers", "3"]);
    assert_eq!(first, second);
    let reports: Vec<LtReport> = serde_json::from_str(&first).unwrap();
    assert_eq!(reports.len(), 6);
    let (_, human, _) = ltlab(&["campaign", "--config", cfg, "--format", "human"]);
    assert_eq!(human.lines().count(), 7);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"jobs":[{"spec_file":"missing.json"}]}"#).unwrap();
    assert_eq!(ltlab(&["campaign", "--config", bad.to_str().unwrap()]).0, EXIT_USAGE);
}

#[test]
fn failed_search_exits_one() {
    // No pt(s, 1) with s < 0.4 has three bound states, so every point is rejected.
    let (code, _, err) = ltlab(&[
        "sweep", "--lower", "0.2,1", "--upper", "0.4,1", "--bound-states", "3", "--points", "3", "--h", "0.05",
    ]);
    assert_eq!(code, EXIT_FAIL);
    assert!(err.contains("evaluations failed"), "{err}");
}
