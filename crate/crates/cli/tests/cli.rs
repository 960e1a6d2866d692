// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::Duration;

fn iwastat() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_iwastat"));
    c.env_remove("IWASTAT_CACHE");
    c
}

fn run(args: &[&str]) -> Output {
    iwastat().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn densities_prints_bound_with_error() {
    let o = run(&["--no-header", "densities", "--p", "3", "--n", "2"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let line = s
        .lines()
        .find(|l| l.starts_with("lower density lambda_3 >= 2"))
        .unwrap();
    assert!(line.contains("0.019779") && line.contains(" ± "), "{line}");
}

#[test]
fn classgroup_of_minus_23() {
    let s = stdout(&run(&["--no-header", "classgroup", "--delta", "-23"]));
    assert!(
        s.contains("h = 3\n") && s.contains("divisors = [3]\n"),
        "{s}"
    );
}

#[test]
fn lambda_inert_example() {
    let s = stdout(&run(&[
        "--no-header",
        "lambda",
        "--delta",
        "-7",
        "--p",
        "5",
    ]));
    assert!(s.starts_with("lambda=0 method=inert_trivial"), "{s}");
}

#[test]
fn usage_errors_exit_1() {
    let o = run(&["densities", "--p", "3", "--n", "2", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert!(o.stdout.is_empty());
    assert_eq!(run(&["classgroup", "--delta", "-5"]).status.code(), Some(1));
    assert_eq!(
        run(&["lambda", "--delta", "-23", "--p", "4"]).status.code(),
        Some(1)
    );
    assert_eq!(
        run(&["hunt", "--x", "100", "--family", "nonsense"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn header_is_optional_and_output_is_reproducible() {
    let with = stdout(&run(&["classgroup", "--delta", "-47"]));
    assert!(with.starts_with("# iwastat "));
    assert!(with.lines().nth(1).unwrap().contains("\"delta\":-47"));
    let a = run(&["--no-header", "densities", "--p", "5", "--n", "3"]);
    let b = run(&["--no-header", "densities", "--p", "5", "--n", "3"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(!stdout(&a).contains('#'));
}

#[test]
fn json_mirrors_text() {
    let text = stdout(&run(&["--no-header", "densities", "--p", "3", "--n", "1"]));
    let json: serde_json::Value = serde_json::from_slice(
        &run(&["--no-header", "--json", "densities", "--p", "3", "--n", "1"]).stdout,
    )
    .unwrap();
    assert!(json.get("header").is_none());
    let v = json["result"]["pochhammer"]["value"].as_f64().unwrap();
    assert!(text.contains(&format!("{v:.10}")));
    let with_header: serde_json::Value =
        serde_json::from_slice(&run(&["--json", "densities", "--p", "3", "--n", "1"]).stdout)
            .unwrap();
    assert_eq!(
        with_header["header"]["config"]["cli"]["command"]["subcommand"],
        "densities"
    );
}

#[test]
fn matrix_sim_exhaustive_csv() {
    let s = stdout(&run(&[
        "--no-header",
        "matrix-sim",
        "--p",
        "3",
        "--size",
        "2",
        "--exhaustive",
    ]));
    let rows: Vec<&str> = s
        .lines()
        .skip_while(|l| !l.starts_with("corank,"))
        .collect();
    assert_eq!(rows[0], "corank,count,empirical,predicted,abs_error");
    let counts: Vec<&str> = rows[1..]
        .iter()
        .map(|r| r.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(counts, ["48", "32", "1"]);
}

#[test]
fn verify_small_suite() {
    let args = [
        "--no-header",
        "verify",
        "--class-number-bound",
        "1000",
        "--lambda-bound",
        "600",
    ];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert!(stdout(&a).ends_with("11 checks, 0 failed\n"));
    assert_eq!(a.stdout, run(&args).stdout);
}

#[test]
fn hunt_for_two_three_torsion_factors() {
    let s = stdout(&run(&[
        "--no-header",
        "hunt",
        "--x",
        "5000",
        "--family",
        "contains:3:2",
        "--quiet",
    ]));
    assert!(
        s.contains("smallest Δ = -3299, h = 27 (analytic 27), divisors = [3, 9]"),
        "{s}"
    );
}

fn sweep_args<'a>(x: &'a str, out: &'a Path, extra: &[&'a str]) -> Vec<String> {
    let mut v: Vec<String> = [
        "--no-header",
        "sweep",
        "--x",
        x,
        "--primes",
        "3,5",
        "--lambda-ceiling",
        "300",
        "--quiet",
        "--out",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    v.push(out.display().to_string());
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

#[test]
fn sweep_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = iwastat()
        .args(sweep_args("500", &out, &["--svg"]))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["records.csv", "report.json", "distributions.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let s = stdout(&o);
    assert!(s.contains("r_3 >= 1 (|Δ| <= 500)"), "{s}");
    assert!(s.contains("lambda_3 >= 1 (|Δ| <= 300)"), "{s}");
}

#[test]
fn sweep_uses_cache_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let o = iwastat()
        .env("IWASTAT_CACHE", &cache)
        .args([
            "--no-header",
            "sweep",
            "--x",
            "200",
            "--primes",
            "3",
            "--quiet",
        ])
        .output()
        .unwrap();
    assert!(o.status.success());
    let entries: Vec<_> = std::fs::read_dir(&cache).unwrap().collect();
    assert_eq!(entries.len(), 1);
}

#[test]
fn corrupt_checkpoint_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("ck.jsonl");
    std::fs::write(&ck, "{\"delta\":-3}\n").unwrap();
    let o = run(&[
        "sweep",
        "--x",
        "100",
        "--primes",
        "3",
        "--checkpoint",
        ck.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":1:"));
}

#[test]
fn killed_sweep_resumes_to_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("ck.jsonl");
    let resumed = dir.path().join("resumed");
    let fresh = dir.path().join("fresh");
    let x = "150000";
    let ck_arg = ck.display().to_string();

    let mut child = iwastat()
        .args(sweep_args(
            x,
            &resumed,
            &["--checkpoint", &ck_arg, "--workers", "1"],
        ))
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    // wait until some records are on disk, then kill
    for _ in 0..600 {
        std::thread::sleep(Duration::from_millis(50));
        if std::fs::metadata(&ck)
            .map(|m| m.len() > 200_000)
            .unwrap_or(false)
        {
            break;
        }
    }
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(
        !resumed.join("report.json").exists(),
        "sweep finished before it was killed"
    );

    let o = iwastat()
        .args(sweep_args(x, &resumed, &["--checkpoint", &ck_arg]))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = iwastat().args(sweep_args(x, &fresh, &[])).output().unwrap();
    assert!(o.status.success());
    for f in ["records.csv", "report.json"] {
        assert_eq!(
            std::fs::read(resumed.join(f)).unwrap(),
            std::fs::read(fresh.join(f)).unwrap(),
            "{f}"
        );
    }
}
