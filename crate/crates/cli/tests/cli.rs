use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BSC_CASCADE: &str = r#"{"name": "bsc", "w1": [[0.9, 0.1], [0.1, 0.9]], "w2": [[0.9, 0.1], [0.1, 0.9]]}"#;
const IDENTITY: &str = r#"{"w1": [[1, 0], [0, 1]], "w2": [[1, 0], [0, 1]]}"#;

fn dbx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dbx"))
        .args(args)
        .env_remove("DBX_THREADS")
        .output()
        .expect("spawn dbx")
}

fn channel_file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn capacity_identity_matches_closed_form() {
    // Z = Y = X: C^(μ) = max(μ, 1) ln 2
    let dir = TempDir::new().unwrap();
    let ch = channel_file(&dir, "id.json", IDENTITY);
    let csv = dir.path().join("c.csv");
    for mu in [0.5, 1.0, 2.0] {
        let out = dbx(&["capacity", "--channel", s(&ch), "--mu", &mu.to_string(), "--csv", s(&csv)]);
        let r = report(&out);
        let c = r["results"]["points"][0]["c_mu"].as_f64().unwrap();
        assert!((c - f64::max(mu, 1.0) * 2f64.ln()).abs() < 1e-9, "μ={mu}: {c}");
        let text = std::fs::read_to_string(&csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2, "single μ gives one row");
        assert_eq!(lines[0], "mu,c_mu");
        let cells: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(cells[0], mu);
        assert_eq!(cells[1], c, "CSV and JSON agree bitwise");
    }
}

#[test]
fn capacity_grid_csv_round_trips() {
    let dir = TempDir::new().unwrap();
    let ch = channel_file(&dir, "bsc.json", BSC_CASCADE);
    let csv = dir.path().join("c.csv");
    let out = dbx(&["capacity", "--channel", s(&ch), "--mu-points", "9", "--csv", s(&csv)]);
    let r = report(&out);
    let text = std::fs::read_to_string(&csv).unwrap();
    let points = r["results"]["points"].as_array().unwrap();
    assert_eq!(text.lines().count(), 10);
    for (line, p) in text.lines().skip(1).zip(points) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[1].parse::<f64>().unwrap(), p["c_mu"].as_f64().unwrap());
        assert_eq!(cells[1].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    }
}

#[test]
fn malformed_row_is_named() {
    let dir = TempDir::new().unwrap();
    let ch = channel_file(
        &dir,
        "bad.json",
        r#"{"w1": [[0.9, 0.1], [0.2, 0.7]], "w2": [[1, 0], [0, 1]]}"#,
    );
    let out = dbx(&["capacity", "--channel", s(&ch), "--mu", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("w1") && err.contains("row 1"), "{err}");
}

#[test]
fn syntax_error_reports_line() {
    let dir = TempDir::new().unwrap();
    let ch = channel_file(&dir, "bad.json", "{\n  \"w1\": [[1.0]],\n  \"w2\": [[1.0],\n}");
    let out = dbx(&["capacity", "--channel", s(&ch)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));

    let ch = channel_file(&dir, "unknown.json", r#"{"w1": [[1.0]], "w2": [[1.0]], "w3": []}"#);
    let out = dbx(&["capacity", "--channel", s(&ch)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("w3"));
}

#[test]
fn exponent_sign_follows_region() {
    let dir = TempDir::new().unwrap();
    let ch = channel_file(&dir, "bsc.json", BSC_CASCADE);
    let grid = ["--mu-min", "0.1", "--mu-max", "10", "--mu-points", "9", "--lambda-min", "0.01", "--lambda-max", "10", "--lambda-points", "9"];
    let run = |rates: &str| {
        let mut args = vec!["exponent", "--channel", s(&ch), "--rates", rates];
        args.extend(grid);
        report(&dbx(&args))
    };
    let outside = run("0.5,0.3");
    assert_eq!(outside["results"]["region"], "outside");
    assert!(outside["results"]["f_value"].as_f64().unwrap() > 0.0);
    let inside = run("0.05,0.05");
    assert_eq!(inside["results"]["region"], "inside");
    assert!(inside["results"]["f_value"].as_f64().unwrap() <= 1e-6);
    let zero = run("0,0");
    assert!(zero["results"]["f_value"].as_f64().unwrap() <= 0.0);
}

#[test]
fn exponent_grid_csv_has_every_cell() {
    let dir = TempDir::new().unwrap();
    let ch = channel_file(&dir, "bsc.json", BSC_CASCADE);
    let csv = dir.path().join("grid.csv");
    let out = dbx(&[
        "exponent", "--channel", s(&ch), "--rates", "0.5,0.3", "--mu-points", "4", "--lambda-points", "5",
        "--grid-csv", s(&csv),
    ]);
    let r = report(&out);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("mu,lambda,omega,f,converged"));
    assert_eq!(text.lines().count(), 21);
    let f_max = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(f_max, r["results"]["f_value"].as_f64().unwrap());
}

#[test]
fn bits_flag_converts_rates() {
    let dir = TempDir::new().unwrap();
    let ch = channel_file(&dir, "bsc.json", BSC_CASCADE);
    let out = dbx(&["--bits", "region", "--channel", s(&ch), "--rates", "1,0.5", "--mu-points", "5"]);
    let r = report(&out);
    let r1 = r["config"]["rates"]["r1"].as_f64().unwrap();
    assert_eq!(r1, std::f64::consts::LN_2);
    assert_eq!(r["results"]["inside"], false);
}

#[test]
fn region_inside_and_outside() {
    let dir = TempDir::new().unwrap();
    let ch = channel_file(&dir, "bsc.json", BSC_CASCADE);
    let inside = report(&dbx(&["region", "--channel", s(&ch), "--rates", "0.1,0.05"]));
    assert_eq!(inside["results"]["inside"], true);
    // corner R1max = ln 2 - h(0.1) ≈ 0.368064
    let outside = report(&dbx(&["region", "--channel", s(&ch), "--rates", "0.37,0"]));
    assert_eq!(outside["results"]["inside"], false);
}

#[test]
fn verify_examples() {
    let out = dbx(&["verify", "lemma6", "--n", "3", "--trials", "50", "--seed", "7"]);
    let r = report(&out);
    assert_eq!(r["results"]["passed"], 50);
    assert_eq!(r["results"]["trials"].as_array().unwrap().len(), 50);

    let r = report(&dbx(&["verify", "prop1", "--n", "2", "--trials", "100"]));
    assert_eq!(r["flags"]["all_hold"], true);

    let out = dbx(&["verify", "lemma1", "--n", "9", "--alphabet", "3"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("budget"), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(dbx(&["verify", "lemma7"]).status.code(), Some(1));
    assert_eq!(dbx(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(dbx(&["verify", "lemma1", "--n", "0"]).status.code(), Some(1));
    let dir = TempDir::new().unwrap();
    let ch = channel_file(&dir, "bsc.json", BSC_CASCADE);
    let out = dbx(&["simulate", "--channel", s(&ch), "--rates", "0.5,0.3", "--n", "8", "--samples", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = dbx(&["exponent", "--channel", s(&ch), "--rates", "-1,0.3"]);
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_dbx"))
        .args(["verify", "lemma1", "--trials", "2"])
        .env("DBX_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thread_cap_is_accepted() {
    let out = Command::new(env!("CARGO_BIN_EXE_dbx"))
        .args(["verify", "lemma2", "--trials", "5"])
        .env("DBX_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn reports_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let ch = channel_file(&dir, "bsc.json", BSC_CASCADE);
    let args = [
        "simulate", "--channel", s(&ch), "--rates", "0.5,0.3", "--n", "4,8", "--samples", "3000",
        "--seed", "11", "--mu-points", "4", "--lambda-points", "4",
    ];
    let strip = |o: Output| {
        let mut v: Value = report(&o);
        v.as_object_mut().unwrap().remove("wall_time_s");
        serde_json::to_string(&v).unwrap()
    };
    assert_eq!(strip(dbx(&args)), strip(dbx(&args)));
    let a = strip(dbx(&["verify", "holder", "--trials", "4", "--seed", "3"]));
    let b = strip(dbx(&["verify", "holder", "--trials", "4", "--seed", "3"]));
    assert_eq!(a, b);
}

#[test]
fn simulate_inside_rates_approach_one() {
    let dir = TempDir::new().unwrap();
    let ch = channel_file(&dir, "bsc.json", BSC_CASCADE);
    let csv = dir.path().join("s.csv");
    let out = dbx(&[
        "simulate", "--channel", s(&ch), "--rates", "0.02,0.02", "--n", "8,32,64", "--samples", "20000",
        "--seed", "3", "--mu-min", "0.5", "--mu-max", "2", "--mu-points", "41", "--lambda-points", "3",
        "--csv", s(&csv),
    ]);
    let r = report(&out);
    let pc: Vec<f64> = r["results"]["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["estimate"]["pc_hat"].as_f64().unwrap())
        .collect();
    assert!(pc[1] > pc[0] && pc[2] > 0.95, "{pc:?}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("n,pc_hat,ci_low,ci_high,decay,f_value,floor"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn simulate_outside_rates_respect_floor() {
    let dir = TempDir::new().unwrap();
    let ch = channel_file(&dir, "bsc.json", BSC_CASCADE);
    let out = dbx(&[
        "simulate", "--channel", s(&ch), "--rates", "0.5,0.3", "--n", "4,8", "--samples", "20000",
        "--seed", "5", "--mu-min", "0.1", "--mu-max", "10", "--mu-points", "9", "--lambda-min", "0.01",
        "--lambda-max", "10", "--lambda-points", "9",
    ]);
    let r = report(&out);
    let f = r["results"]["f_value"].as_f64().unwrap();
    assert!(f > 0.0);
    for p in r["results"]["points"].as_array().unwrap() {
        assert_eq!(p["consistent"], true, "{p}");
    }
}
