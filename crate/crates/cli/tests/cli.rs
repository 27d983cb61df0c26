use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn durateless(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_durateless")).args(args).env_remove("DURATELESS_THREADS").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

/// Rows of a CSV file as string fields, header excluded.
fn rows(file: &str) -> Vec<Vec<String>> {
    fs::read_to_string(file).unwrap().lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn version_reports_format() {
    let out = durateless(&["--version"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains(env!("CARGO_PKG_VERSION")) && text.contains("format 1"), "{text}");
}

#[test]
fn analyze_writes_one_row_per_overhead() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "curve.csv");
    let spec = fixture("published_eta10.json");
    let res = durateless(&["analyze", spec.to_str().unwrap(), "--gamma-grid", "0.5,1.0,1.5", "--out", &out]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let r = rows(&out);
    assert_eq!(r.len(), 3);
    for w in r.windows(2) {
        assert!(num(&w[1][1]) <= num(&w[0][1]) && num(&w[1][2]) <= num(&w[0][2]));
    }
    let res = durateless(&["analyze", spec.to_str().unwrap(), "--out", &out]);
    assert_eq!(code(&res), 0);
    assert_eq!(rows(&out)[0][0], "1.05");
}

#[test]
fn invalid_spec_exits_2_without_output() {
    let dir = TempDir::new().unwrap();
    let spec = path(&dir, "bad.json");
    fs::write(&spec, r#"{"rho":1,"gamma":1,"p1":0.9,"p2":0.6,"omega":{"1":1},"phi":{"1":1}}"#).unwrap();
    let out = path(&dir, "curve.csv");
    let res = durateless(&["analyze", &spec, "--out", &out]);
    assert_eq!(code(&res), 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("p1 + p2"));
    assert!(!Path::new(&out).exists());
    fs::write(&spec, "{not json").unwrap();
    assert_eq!(code(&durateless(&["analyze", &spec, "--out", &out])), 2);
    let grid = fixture("eep_degree_one.json");
    assert_eq!(code(&durateless(&["analyze", grid.to_str().unwrap(), "--gamma-grid", "1,-1", "--out", &out])), 2);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1, "temporary files left behind");
}

#[test]
fn io_failures_exit_1() {
    let dir = TempDir::new().unwrap();
    let missing = path(&dir, "missing.json");
    assert_eq!(code(&durateless(&["analyze", &missing, "--out", &path(&dir, "x.csv")])), 1);
    let spec = fixture("eep_degree_one.json");
    let unwritable = path(&dir, "no/such/dir/x.csv");
    assert_eq!(code(&durateless(&["analyze", spec.to_str().unwrap(), "--out", &unwritable])), 1);
    assert_eq!(code(&durateless(&["design", "--front", &missing, "--eta", "1"])), 1);
}

#[test]
fn simulate_degree_one_passes_and_repeats() {
    let dir = TempDir::new().unwrap();
    let spec = fixture("eep_degree_one.json");
    let (a, b) = (path(&dir, "a.csv"), path(&dir, "b.csv"));
    for out in [&a, &b] {
        let res = durateless(&[
            "simulate",
            spec.to_str().unwrap(),
            "--k",
            "2000",
            "--trials",
            "200",
            "--seed",
            "7",
            "--out",
            out,
        ]);
        assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let r = rows(&a);
    assert_eq!(r.len(), 1);
    assert_eq!((r[0][9].as_str(), r[0][10].as_str()), ("pass", "pass"));
}

#[test]
fn simulate_rejects_short_blocks() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "s.csv");
    let spec = fixture("published_eta10.json");
    let res = durateless(&["simulate", spec.to_str().unwrap(), "--k", "50", "--trials", "2", "--out", &out]);
    assert_eq!(code(&res), 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("exceeds block length"));
    assert!(!Path::new(&out).exists());
    let res = durateless(&["simulate", spec.to_str().unwrap(), "--trials", "0", "--out", &out]);
    assert_eq!(code(&res), 2);
}

fn optimize(dir: &TempDir, extra: &[&str]) -> (String, String) {
    let (front, params) = (path(dir, "front.csv"), path(dir, "params.json"));
    let mut args = vec!["optimize", "--out-front", &front, "--out-params", &params];
    args.extend_from_slice(extra);
    let res = durateless(&args);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    (front, params)
}

fn audit_front(front: &str) -> Vec<[f64; 2]> {
    let objs: Vec<[f64; 2]> = rows(front).iter().map(|r| [num(&r[0]), num(&r[1])]).collect();
    for a in &objs {
        for b in &objs {
            let dominated = a[0] <= b[0] && a[1] <= b[1] && a != b;
            assert!(!dominated, "{a:?} dominates {b:?}");
        }
    }
    objs
}

#[test]
fn optimize_without_generations_keeps_initial_front() {
    let dir = TempDir::new().unwrap();
    let (front, _) = optimize(&dir, &["--b1", "10", "--b2", "10", "--pop", "30", "--gens", "0", "--seed", "4"]);
    let objs = audit_front(&front);
    assert!(!objs.is_empty() && objs.len() <= 30);
}

#[test]
fn design_round_trips_through_analyze() {
    let dir = TempDir::new().unwrap();
    let (front, params) = optimize(&dir, &["--b1", "10", "--b2", "10", "--pop", "40", "--gens", "20", "--seed", "3"]);
    let objs = audit_front(&front);
    for target in ["1", "10", "0.2"] {
        let res = durateless(&["design", "--front", &params, "--eta", target]);
        assert_eq!(code(&res), 0);
        let spec = path(&dir, "chosen.json");
        fs::write(&spec, &res.stdout).unwrap();
        let curve = path(&dir, "chosen.csv");
        assert_eq!(code(&durateless(&["analyze", &spec, "--out", &curve])), 0);
        let r = &rows(&curve)[0];
        let (b1, b2) = (num(&r[1]), num(&r[2]));
        assert!(
            objs.iter().any(|o| (o[0] - b1).abs() <= 1e-9 && (o[1] - b2).abs() <= 1e-9),
            "({b1}, {b2}) not on the front"
        );
        // The choice is the front point nearest the target in log space.
        let t: f64 = target.parse::<f64>().unwrap().ln();
        let best = objs.iter().map(|o| ((o[1] / o[0]).ln() - t).abs()).fold(f64::INFINITY, f64::min);
        assert!(((b2 / b1).ln() - t).abs() <= best + 1e-9);
    }
}

#[test]
fn design_rejects_bad_front_files() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "params.json");
    fs::write(&file, r#"{"format_version":1,"problem":{"rho":1.0,"k":2000,"gamma":1.05,"b1":2,"b2":2},"points":[]}"#)
        .unwrap();
    assert_eq!(code(&durateless(&["design", "--front", &file, "--eta", "1"])), 2);
    fs::write(&file, "[]").unwrap();
    assert_eq!(code(&durateless(&["design", "--front", &file, "--eta", "1"])), 2);
    fs::write(&file, r#"{"format_version":99,"problem":{"rho":1.0,"k":2000,"gamma":1.05,"b1":2,"b2":2},"points":[]}"#)
        .unwrap();
    assert_eq!(code(&durateless(&["design", "--front", &file, "--eta", "1"])), 2);
}

#[test]
fn optimize_rejects_bad_settings() {
    let dir = TempDir::new().unwrap();
    let (front, params) = (path(&dir, "f.csv"), path(&dir, "p.json"));
    for bad in [["--rho", "1.5"], ["--pop", "1"], ["--b1", "0"]] {
        let mut args = vec!["optimize", "--out-front", &front, "--out-params", &params];
        args.extend_from_slice(&bad);
        assert_eq!(code(&durateless(&args)), 2, "{bad:?}");
    }
    assert!(!Path::new(&front).exists() && !Path::new(&params).exists());
}

#[test]
fn config_file_and_flags_combine() {
    let dir = TempDir::new().unwrap();
    let config = path(&dir, "ga.json");
    fs::write(&config, r#"{"population": 20, "generations": 5, "seed": 11}"#).unwrap();
    let (front, _) = optimize(&dir, &["--b1", "6", "--b2", "6", "--config", &config]);
    let from_file = fs::read(&front).unwrap();
    let (front, _) = optimize(&dir, &["--b1", "6", "--b2", "6", "--pop", "20", "--gens", "5", "--seed", "11"]);
    assert_eq!(fs::read(&front).unwrap(), from_file);
    fs::write(&config, r#"{"populaton": 20}"#).unwrap();
    let res = durateless(&["optimize", "--config", &config, "--out-front", &front, "--out-params", &path(&dir, "p")]);
    assert_eq!(code(&res), 2);
}

#[test]
fn thread_settings() {
    let dir = TempDir::new().unwrap();
    let spec = fixture("eep_degree_one.json");
    let out = path(&dir, "s.csv");
    let res = Command::new(env!("CARGO_BIN_EXE_durateless"))
        .args(["simulate", spec.to_str().unwrap(), "--k", "200", "--trials", "4", "--out", &out])
        .env("DURATELESS_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&res), 0);
    let single = path(&dir, "t.csv");
    let res = durateless(&[
        "--threads",
        "1",
        "simulate",
        spec.to_str().unwrap(),
        "--k",
        "200",
        "--trials",
        "4",
        "--out",
        &single,
    ]);
    assert_eq!(code(&res), 0);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&single).unwrap());
    assert_eq!(code(&durateless(&["--threads", "0", "analyze", spec.to_str().unwrap(), "--out", &out])), 2);
}
