use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use besovnet::expansion::{CoeffMap, SampledField};
use besovnet::harness::{validate_report_json, RateReport};
use besovnet::Network;

fn run(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_besovnet"))
        .current_dir(dir)
        .env("RUST_BACKTRACE", "0")
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "besovnet {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn bump(dir: &Path) {
    run(
        dir,
        &[
            "target", "generate", "--kind", "spline_bump", "--wavelet", "2,2", "--j0", "2",
            "--j-max", "6", "--out", "f.bin", "--coeffs", "c.csv",
        ],
    );
}

#[test]
fn wavelet_dump_is_json_with_masks() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["wavelet", "dump", "--l", "2", "--l-dual", "2"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["L"], 2);
    assert!(v["psi"]["breakpoints"].as_array().unwrap().len() > 2);
    assert!(v["h_dual"].is_object());
}

#[test]
fn generate_analyze_compile_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    bump(d);
    let field = SampledField::read(&d.join("f.bin")).unwrap();
    assert_eq!(field.resolution(), 128);
    CoeffMap::from_csv(&fs::read_to_string(d.join("c.csv")).unwrap(), 2.0).unwrap();

    run(d, &["analyze", "--field", "f.bin", "--l", "2", "--l-dual", "2", "--j0", "2", "--out", "a.csv"]);
    let a = CoeffMap::from_csv(&fs::read_to_string(d.join("a.csv")).unwrap(), 2.0).unwrap();
    assert!(!a.coarse().is_empty());

    let out = run(
        d,
        &["compile", "--field", "f.bin", "--j0", "2", "--n", "16", "--r", "1", "--out", "net.json"],
    );
    let report = String::from_utf8(out.stdout).unwrap();
    let row = report.lines().last().unwrap();
    let error: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!(error < 1e-12, "{report}");

    let net = Network::from_json_str(&fs::read_to_string(d.join("net.json")).unwrap()).unwrap();
    fs::write(d.join("pts.csv"), "0.1\n0.5\n0.73\n").unwrap();
    let out = run(d, &["eval", "--network", "net.json", "--points", "pts.csv"]);
    let values: Vec<f64> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    for (x, v) in [0.1, 0.5, 0.73].iter().zip(&values) {
        assert_eq!(*v, net.eval_scalar(*x).unwrap());
    }
}

#[test]
fn config_entries_override_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    bump(d);
    fs::write(d.join("cfg.txt"), "# overrides\nn = 8\nr = 2\n").unwrap();
    let out = run(
        d,
        &[
            "--config", "cfg.txt", "compile", "--field", "f.bin", "--j0", "2", "--n", "16", "--r",
            "1", "--out", "net.json",
        ],
    );
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.lines().last().unwrap().starts_with("8,"), "{report}");
    let net = Network::from_json_str(&fs::read_to_string(d.join("net.json")).unwrap()).unwrap();
    assert_eq!(net.r_class(), 2);
}

#[test]
fn rates_reports_are_reproducible_and_valid() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let sweep = ["rates", "--j-max", "8", "--seed", "3", "--ns", "4,8,16,32"];
    for name in ["a.csv", "b.csv"] {
        run(d, &[&sweep[..], &["--out", name]].concat());
    }
    let a = fs::read(d.join("a.csv")).unwrap();
    assert_eq!(a, fs::read(d.join("b.csv")).unwrap());
    let report = RateReport::from_csv(&String::from_utf8(a).unwrap()).unwrap();
    assert_eq!(report.rows.len(), 4);

    run(d, &[&sweep[..], &["--r", "2", "--format", "json", "--out", "r.json"]].concat());
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    validate_report_json(&v).unwrap();
}

#[test]
fn bad_inputs_fail_with_messages() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_besovnet"))
        .current_dir(dir.path())
        .env("RUST_BACKTRACE", "0")
        .args(["analyze", "--field", "missing.bin", "--out", "a.csv"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.bin"));

    let out = Command::new(env!("CARGO_BIN_EXE_besovnet"))
        .current_dir(dir.path())
        .env("RUST_BACKTRACE", "0")
        .args(["rates", "--kind", "sphere", "--out", "r.csv"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("sphere"));
}
