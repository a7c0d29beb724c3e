use std::fs;
use std::path::PathBuf;
use std::process::Command;

use lrstokes_cli::{main_with_args, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE, SINE_HEADER, TRACE_HEADER};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lrstokes-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("lrstokes").chain(args.iter().copied()))
}

fn rows(path: &PathBuf) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn sine_n8_writes_one_row_per_mode_and_traces() {
    let out = scratch("sine8.csv");
    let trace = scratch("trace8.csv");
    let code = run(&["sine", "--n", "8", "--out", out.to_str().unwrap(), "--trace", trace.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let t = rows(&out);
    assert_eq!(t[0], SINE_HEADER);
    assert_eq!(t.len(), 3);
    assert_eq!((t[1][1].as_str(), t[2][1].as_str()), ("lowrank", "full"));
    for row in &t[1..] {
        let err: f64 = row[5].parse().unwrap();
        assert!(err > 0.0 && err < 0.2);
        assert!(row[5].contains('e'));
    }
    for mode in ["lowrank", "full"] {
        let tr = rows(&scratch(&format!("trace8_n8_{mode}.csv")));
        assert_eq!(tr[0], TRACE_HEADER);
        assert!(tr.len() > 1);
    }
}

#[test]
fn csv_is_deterministic_apart_from_time() {
    let a = scratch("det_a.csv");
    let b = scratch("det_b.csv");
    assert_eq!(run(&["sine", "--n", "8,16", "--out", a.to_str().unwrap()]), EXIT_OK);
    assert_eq!(run(&["sine", "--n", "8,16", "--parallel", "--out", b.to_str().unwrap()]), EXIT_OK);
    let strip = |mut t: Vec<Vec<String>>| {
        for r in t.iter_mut().skip(1) {
            r.remove(2);
        }
        t
    };
    assert_eq!(strip(rows(&a)), strip(rows(&b)));
}

#[test]
fn non_convergence_keeps_partial_csv() {
    let out = scratch("partial.csv");
    let code = run(&["sine", "--n", "8,16", "--mode", "lowrank", "--max-iter", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_NOT_CONVERGED);
    let t = rows(&out);
    assert_eq!(t.len(), 3);
    assert_eq!(t[1][0], "8");
}

#[test]
fn usage_errors() {
    for args in [&["sine", "--n", "6"][..], &["sine", "--eps", "1"], &["sine", "--mode", "dense"], &["solve"], &[]] {
        assert_eq!(run(args), EXIT_USAGE, "{args:?}");
    }
    assert_eq!(run(&["--help"]), EXIT_OK);
}

#[test]
fn binary_exit_status_and_markdown() {
    let exe = env!("CARGO_BIN_EXE_lrstokes");
    let md = scratch("spectrum.md");
    let out = Command::new(exe).args(["spectrum", "--n", "8", "--markdown", md.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("n,size,zeros,ones,min_nonzero,max\n8,64,2,36,"));
    assert!(fs::read_to_string(&md).unwrap().starts_with("| n | size |"));
    let bad = Command::new(exe).args(["cavity", "--n", "100"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn cavity_and_poisson_rows() {
    let out = scratch("cavity.csv");
    assert_eq!(run(&["cavity", "--n", "16", "--out", out.to_str().unwrap()]), EXIT_OK);
    let t = rows(&out);
    let diff: f64 = t[1][5].parse().unwrap();
    assert!(diff <= 1e-5);
    let out = scratch("poisson.csv");
    assert_eq!(run(&["poisson", "--n", "32", "--rank", "3", "--out", out.to_str().unwrap()]), EXIT_OK);
    let t = rows(&out);
    let residual: f64 = t[1][5].parse().unwrap();
    assert!(residual <= 100.0 * 5e-9);
}
