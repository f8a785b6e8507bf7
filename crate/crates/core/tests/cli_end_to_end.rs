use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use dualbound::cli::{parse_config_with, run, CSV_HEADER, ENV_PREFIX};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dualbound"))
}

fn override_env(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    pairs
        .iter()
        .map(|(k, v)| (format!("{ENV_PREFIX}{}", k.to_uppercase()), v.to_string()))
        .collect()
}

#[test]
fn every_checked_in_config_validates() {
    let mut seen = 0;
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cfg") {
            let out = binary().arg("check").arg(&path).output().unwrap();
            assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
            assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok:"));
            seen += 1;
        }
    }
    assert!(seen >= 15, "only {seen} configs found");
}

#[test]
fn binary_runs_the_zero_problem() {
    let dir = tempfile::tempdir().unwrap();
    let out = binary()
        .arg("run")
        .arg(configs_dir().join("zero_debug.cfg"))
        .env(format!("{ENV_PREFIX}OUTPUT_DIR"), dir.path())
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    // Three methods at one point; every row is g(x₀) = ½(0.25 + 0.16 + 1).
    assert_eq!(lines.len(), 4);
    for line in &lines[1..] {
        let mean: f64 = line.split(',').nth(9).unwrap().parse().unwrap();
        assert!((mean - 0.705).abs() < 1e-12, "{line}");
    }
    assert!(dir.path().join("report.txt").exists());
}

#[test]
fn bad_configs_exit_with_parse_status() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown.cfg", "problem=lq\nd=2\nbogus=1\n", "bogus"),
        ("bad_value.cfg", "problem=lq\nd=2\nM=many\n", "line 3"),
        ("combination.cfg", "problem=aiyagari\nd=2\nmodel=analytic\n", "aiyagari"),
    ];
    for (name, text, needle) in cases {
        let path = dir.path().join(name);
        fs::write(&path, text).unwrap();
        let out = binary().arg("check").arg(&path).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{name}");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains(needle), "{name}: {stderr}");
    }
}

#[test]
fn binary_rejects_unknown_environment_override() {
    let out = binary()
        .arg("check")
        .arg(configs_dir().join("zero_debug.cfg"))
        .env(format!("{ENV_PREFIX}NOT_A_KEY"), "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rows_cover_every_method_and_point_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs_dir().join("lq_d2_profile.cfg")).unwrap();
    let env = override_env(&[
        ("M", "2"),
        ("N_T", "20"),
        ("M_up", "64"),
        ("N_T_up", "20"),
        ("output_dir", dir.path().to_str().unwrap()),
    ]);
    let cfg = parse_config_with(&text, env).unwrap();
    assert_eq!(cfg.x0.len(), 9);
    let out = run(&cfg).unwrap();
    assert_eq!(out.rows.len(), cfg.x0.len() * cfg.methods.len());
    let csv = fs::read_to_string(&out.csv).unwrap();
    let lines: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(lines.len(), out.rows.len());
    assert!(lines[0].contains(",-2 0,hopf,"), "{}", lines[0]);
    assert!(lines[1].contains(",-2 0,primal,"), "{}", lines[1]);
    assert!(lines[17].contains(",2 0,primal,"), "{}", lines[17]);
}
