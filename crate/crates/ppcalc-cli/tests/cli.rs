//! End-to-end checks of the binary: report emission, reproducibility of the
//! JSON body modulo the timestamp field, and the exit-code contract.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ppcalc"))
}

fn strip_timestamp(report: &str) -> String {
    report
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn eppf_report_and_csv() {
    let dir = tempdir("eppf");
    let out = bin()
        .args([
            "eppf", "--family", "pd", "--alpha", "0.5", "--theta", "0.5", "--n", "4",
            "--out-dir",
        ])
        .arg(&dir)
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(Path::new(&dir).join("eppf_table.csv")).unwrap();
    let mut total = 0.0f64;
    for line in csv.lines().skip(1) {
        let prob: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        total += prob;
    }
    assert!((total - 1.0).abs() < 1e-10, "probabilities sum to {total}");
    assert_eq!(csv.lines().count(), 16); // header + Bell(4)
}

#[test]
fn reports_are_reproducible_given_seed() {
    let (dir_a, dir_b) = (tempdir("repro_a"), tempdir("repro_b"));
    for dir in [&dir_a, &dir_b] {
        let out = bin()
            .args([
                "sample-partition",
                "--family",
                "ewens",
                "--theta",
                "1.0",
                "--n",
                "4",
                "--draws",
                "5000",
                "--seed",
                "42",
                "--out-dir",
            ])
            .arg(dir)
            .output()
            .expect("binary runs");
        assert!(out.status.success());
    }
    let a = fs::read_to_string(Path::new(&dir_a).join("sample-partition_report.json")).unwrap();
    let b = fs::read_to_string(Path::new(&dir_b).join("sample-partition_report.json")).unwrap();
    assert_eq!(strip_timestamp(&a), strip_timestamp(&b));
}

#[test]
fn config_document_with_flag_override() {
    let dir = tempdir("config");
    let cfg_path = Path::new(&dir).join("run.json");
    fs::write(
        &cfg_path,
        r#"{"command": "eppf", "family": "ewens", "theta": 1.0, "n": 3, "seed": 7}"#,
    )
    .unwrap();
    // the flag overrides n = 3 from the config
    let out = bin()
        .args(["--config", cfg_path.to_str().unwrap(), "eppf", "--n", "4", "--out-dir"])
        .arg(&dir)
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(Path::new(&dir).join("eppf_table.csv")).unwrap();
    assert_eq!(csv.lines().count(), 16, "flag must override the config n");
}

#[test]
fn exit_codes_distinguish_error_classes() {
    // configuration error: unknown family
    let out = bin()
        .args(["eppf", "--family", "zipf", "--theta", "1.0", "--out-dir"])
        .arg(tempdir("cfg_err"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "config errors exit 2");

    // numeric error: moment order beyond the enumeration ceiling
    let out = bin()
        .args([
            "moments", "--family", "gamma", "--mass", "1.0", "--order", "13", "--out-dir",
        ])
        .arg(tempdir("num_err"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "numeric errors exit 3");

    // i/o error: missing data file
    let out = bin()
        .args([
            "fit-intensity",
            "--prior",
            "gamma",
            "--data",
            "/nonexistent/events.csv",
            "--out-dir",
        ])
        .arg(tempdir("io_err"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "i/o errors exit 4");
}

#[test]
fn survival_fit_matches_dirichlet_conjugacy() {
    let dir = tempdir("surv");
    let data = Path::new(&dir).join("toy.csv");
    fs::write(&data, "time,event\n0.4,1\n1.1,1\n2.3,1\n").unwrap();
    let out = bin()
        .args([
            "fit-survival",
            "--dirichlet",
            "--theta",
            "2",
            "--f0",
            "exponential,1.0",
            "--data",
            data.to_str().unwrap(),
            "--grid-points",
            "20",
            "--out-dir",
        ])
        .arg(&dir)
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(Path::new(&dir).join("survival_curve.csv")).unwrap();
    let times = [0.4f64, 1.1, 2.3];
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let t: f64 = fields[0].parse().unwrap();
        let got: f64 = fields[1].parse().unwrap();
        let nplus = times.iter().filter(|&&x| x > t).count() as f64;
        let expect = (2.0 * (-t).exp() + nplus) / 5.0;
        assert!(
            (got - expect).abs() < 1e-6,
            "t = {t}: curve {got} vs conjugate {expect}"
        );
    }
}

fn tempdir(tag: &str) -> String {
    let dir = std::env::temp_dir().join(format!("ppcalc_cli_{tag}_{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.to_str().unwrap().to_string()
}
