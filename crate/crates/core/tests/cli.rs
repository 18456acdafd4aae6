use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use polyjac::bench::run_check_with;
use polyjac::format::read_system;
use polyjac::oracle::EntryLocation;
use polyjac::{build_layout, ComplexValue, EvaluationContext, GridConfig};

fn polyjac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyjac"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn generate(dir: &Path, name: &str, shape: [&str; 4], seed: &str) -> (Output, String) {
    let out = dir.join(name);
    let path = out.to_str().unwrap().to_string();
    let o = polyjac(&[
        "generate", "--n", shape[0], "--m", shape[1], "--k", shape[2], "--d", shape[3], "--seed",
        seed, "--out", &path,
    ]);
    (o, path)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn generate_is_deterministic_and_reports_footprint() {
    let dir = tempfile::tempdir().unwrap();
    let (a, pa) = generate(dir.path(), "a.txt", ["32", "32", "9", "2"], "7");
    let (b, pb) = generate(dir.path(), "b.txt", ["32", "32", "9", "2"], "7");
    assert!(a.status.success() && b.status.success());
    assert_eq!(fs::read(&pa).unwrap(), fs::read(&pb).unwrap());
    assert!(stdout(&a).contains("footprint_bytes=18432"));
    assert!(!stderr(&a).contains("warning"));
    let sys = read_system(&pa).unwrap();
    assert_eq!((sys.n(), sys.m(), sys.k(), sys.d()), (32, 32, 9, 2));
}

#[test]
fn generate_warns_at_constant_memory_capacity() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = generate(dir.path(), "big.txt", ["32", "64", "16", "10"], "1");
    assert!(o.status.success());
    assert!(stdout(&o).contains("footprint_bytes=65536"));
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn generate_rejects_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = generate(dir.path(), "x.txt", ["4", "4", "5", "2"], "1");
    assert_eq!(o.status.code(), Some(2));
    let (o, _) = generate(dir.path(), "x.txt", ["4", "4", "2", "256"], "1");
    assert_eq!(o.status.code(), Some(2));
    let o = polyjac(&["generate", "--n", "4", "--m", "4", "--k", "2", "--d", "2", "--out", "/nonexistent/dir/x.txt"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_passes_on_generated_system() {
    let dir = tempfile::tempdir().unwrap();
    let (_, path) = generate(dir.path(), "s.txt", ["10", "10", "5", "4"], "3");
    let o = polyjac(&["check", "--system", &path, "--points", "100", "--seed", "2", "--tol", "1e-10", "--workers", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("pass: 100 point(s)"));
}

#[test]
fn check_rejects_zero_tolerance() {
    let o = polyjac(&["check", "--n", "4", "--m", "4", "--k", "2", "--d", "2", "--tol", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_file_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    fs::write(&path, "2 1 1 3\n1 0 1 0\n1 0 2 1\n").unwrap();
    let o = polyjac(&["check", "--system", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn bench_prints_result_line() {
    let o = polyjac(&["bench", "--n", "8", "--m", "8", "--k", "4", "--d", "3", "--evals", "10", "--workers", "1", "--seed", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("RESULT ")).unwrap();
    let keys: Vec<&str> = line
        .split_whitespace()
        .skip(1)
        .map(|kv| kv.split('=').next().unwrap())
        .collect();
    assert_eq!(
        keys,
        [
            "n", "m", "k", "d", "monomials", "B", "workers", "evals", "baseline_ms", "pipeline_ms",
            "speedup", "mults", "footprint_bytes"
        ]
    );
    // 10 * (8*1 + 64*3 + 64*16)
    assert!(line.contains(" mults=12240 "), "{line}");
}

#[test]
fn bench_rejects_zero_evals() {
    let o = polyjac(&["bench", "--n", "4", "--m", "4", "--k", "2", "--d", "2", "--evals", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corrupted_coefficient_is_located() {
    let dir = tempfile::tempdir().unwrap();
    let (_, path) = generate(dir.path(), "s.txt", ["6", "6", "3", "3"], "5");
    let sys = read_system(&path).unwrap();
    let mut layout = build_layout(&sys).unwrap();
    // derivative coefficient of monomial s = 2 * 6 + 4 (polynomial 3) with respect to its 2nd variable
    let s = 16;
    let var = layout.monomial_positions(s)[1] as usize;
    let slot = layout.monomial_count() + s;
    layout.inject_coeff_fault(slot, ComplexValue::new(1e3, 0.0));
    let mut ctx = EvaluationContext::from_layout(layout, GridConfig::new(32, 1).unwrap()).unwrap();
    let outcome = run_check_with(&mut ctx, &sys, 10, 1, 1e-10).unwrap();
    assert!(!outcome.pass());
    assert_eq!(outcome.failures, 10);
    let worst = outcome.worst.unwrap().worst.unwrap();
    assert_eq!(
        worst.location,
        EntryLocation::Jacobian {
            polynomial: 2,
            variable: var
        }
    );
}
