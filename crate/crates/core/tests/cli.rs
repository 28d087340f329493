mod common;

use std::path::Path;
use std::process::{Command, Output};

use sureshrink::cli::{BENCHMARK_HEADER, METRICS_HEADER};
use sureshrink::{load_pgm, save_pgm, GrayImage};

use common::*;

fn sureshrink(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sureshrink"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn write_test_image(dir: &Path) {
    save_pgm(&structured_image(40, 32, 1), dir.join("clean.pgm")).unwrap();
}

#[test]
fn add_noise_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    write_test_image(dir.path());
    for (out, seed) in [("a.pgm", "5"), ("b.pgm", "5"), ("c.pgm", "6")] {
        let o = sureshrink(
            &["add-noise", "--input", "clean.pgm", "--output", out, "--sigma", "20", "--seed", seed],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.pgm"), read("b.pgm"));
    assert_ne!(read("a.pgm"), read("c.pgm"));
}

#[test]
fn metrics_of_identical_images() {
    let dir = tempfile::tempdir().unwrap();
    write_test_image(dir.path());
    let o = sureshrink(&["metrics", "--reference", "clean.pgm", "--test", "clean.pgm"], dir.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(METRICS_HEADER));
    let cols: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(cols[1], "inf");
    assert!((cols[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(cols[0].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn denoise_writes_requested_outputs() {
    let dir = tempfile::tempdir().unwrap();
    write_test_image(dir.path());
    let p = dir.path();
    assert!(sureshrink(
        &["add-noise", "--input", "clean.pgm", "--output", "noisy.pgm", "--sigma", "15"],
        p
    )
    .status
    .success());
    let o = sureshrink(
        &[
            "denoise", "--input", "noisy.pgm", "--output", "out.pgm", "--sigma", "15", "--search", "7",
            "--reference", "clean.pgm", "--dump-psure", "psure.csv", "--dump-diff", "diff.pgm",
            "--rounds-csv", "rounds.csv",
        ],
        p,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = load_pgm(p.join("out.pgm")).unwrap();
    assert_eq!((out.width(), out.height()), (40, 32));
    let psure = std::fs::read_to_string(p.join("psure.csv")).unwrap();
    assert_eq!(psure.lines().count(), 32);
    assert!(psure.lines().all(|l| l.split(',').count() == 40));
    let rounds = std::fs::read_to_string(p.join("rounds.csv")).unwrap();
    assert!(rounds.starts_with("round,block_size,mean_bsure,mean_p_star,delta"));
    assert!(rounds.lines().count() >= 2);
    assert!(load_pgm(p.join("diff.pgm")).is_ok());
    assert!(String::from_utf8(o.stdout).unwrap().starts_with(METRICS_HEADER));
}

#[test]
fn benchmark_report_has_fixed_header() {
    let dir = tempfile::tempdir().unwrap();
    write_test_image(dir.path());
    let o = sureshrink(
        &[
            "benchmark", "--clean", "clean.pgm", "--sigma", "20", "--search", "7", "--h-sweep",
            "0.4:0.2:0.8", "--report", "r.csv", "--name", "toy",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], BENCHMARK_HEADER);
    // three bandwidths times four methods, in grid order
    assert_eq!(lines.len(), 1 + 12);
    let methods: Vec<&str> = lines[1..5].iter().map(|l| l.split(',').nth(6).unwrap()).collect();
    assert_eq!(methods, ["zero", "std", "max", "bss"]);
    assert!(lines[1].starts_with("toy,20,3,7,"));
    let best = String::from_utf8(o.stdout).unwrap();
    assert_eq!(best.lines().count(), 5);
}

#[test]
fn usage_and_input_errors_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write_test_image(dir.path());
    let p = dir.path();
    assert_eq!(sureshrink(&["denoise"], p).status.code(), Some(2));
    assert_eq!(sureshrink(&["no-such-command"], p).status.code(), Some(2));
    assert_eq!(sureshrink(&["--help"], p).status.code(), Some(0));
    let missing = sureshrink(&["metrics", "--reference", "nope.pgm", "--test", "clean.pgm"], p);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));
    let even = sureshrink(
        &["denoise", "--input", "clean.pgm", "--output", "o.pgm", "--sigma", "10", "--patch", "4"],
        p,
    );
    assert_eq!(even.status.code(), Some(1));
    let psure_zero = sureshrink(
        &[
            "denoise", "--input", "clean.pgm", "--output", "o.pgm", "--sigma", "10", "--search", "7",
            "--method", "zero", "--dump-psure", "x.csv",
        ],
        p,
    );
    assert_eq!(psure_zero.status.code(), Some(1));
    std::fs::write(p.join("bad.pgm"), b"P5\n4 4\n255\nabc").unwrap();
    let truncated = sureshrink(&["metrics", "--reference", "bad.pgm", "--test", "bad.pgm"], p);
    assert_eq!(truncated.status.code(), Some(1));
}

#[test]
fn thread_cap_must_be_positive() {
    let dir = tempfile::tempdir().unwrap();
    write_test_image(dir.path());
    let o = Command::new(env!("CARGO_BIN_EXE_sureshrink"))
        .env("SURESHRINK_THREADS", "0")
        .args(["metrics", "--reference", "clean.pgm", "--test", "clean.pgm"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn saved_images_are_clamped_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let img = GrayImage::new(3, 1, vec![-20.0, 127.5, 300.0]).unwrap();
    save_pgm(&img, dir.path().join("c.pgm")).unwrap();
    let back = load_pgm(dir.path().join("c.pgm")).unwrap();
    assert_eq!(back.data(), &[0.0, 128.0, 255.0]);
}
