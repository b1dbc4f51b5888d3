//! End-to-end behaviour of the `ftn-mccr` binary.

use std::path::Path;
use std::process::{Command, Output};

fn ftn(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ftn-mccr"))
        .args(args)
        .env("FTN_MCCR_CACHE_DIR", cache)
        .output()
        .expect("run ftn-mccr")
}

fn rows(csv_text: &[u8]) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(csv_text).records().map(Result::unwrap).collect()
}

#[test]
fn custom_sweep_writes_csv_to_stdout() {
    let cache = tempfile::tempdir().unwrap();
    let out = ftn(&["--var", "N", "--values", "8,16", "--trials", "10", "-k", "1", "-m", "1"], cache.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = rows(&out.stdout);
    assert_eq!(records.len(), 2);
    assert_eq!(&records[0][0], "N");
    assert_eq!(&records[1][4], "16");
    assert_eq!(&records[0][2], "1");
    assert_eq!(&records[0][17], "ok");
    let se: f64 = records[0][14].parse().unwrap();
    assert!(se > 0.0);
}

#[test]
fn failed_point_sets_exit_code_and_status() {
    let cache = tempfile::tempdir().unwrap();
    let out = ftn(&["--var", "delta", "--values", "0.7,1.3", "--trials", "4"], cache.path());
    assert_eq!(out.status.code(), Some(2));
    let records = rows(&out.stdout);
    assert_eq!(&records[0][17], "ok");
    assert!(records[1][17].starts_with("error"));
    assert_eq!(&records[1][14], "");
}

#[test]
fn flags_override_config_file() {
    let cache = tempfile::tempdir().unwrap();
    let conf = cache.path().join("run.conf");
    std::fs::write(&conf, "var = N\nvalues = 8\ntrials = 3\nseed = 11\nK = 1\nM = 1\nalloc = uniform\n").unwrap();
    let conf = conf.to_str().unwrap();
    let out = ftn(&["--config", conf, "--trials", "5"], cache.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = rows(&out.stdout);
    assert_eq!(&records[0][11], "5");
    assert_eq!(&records[0][12], "11");
    assert_eq!(&records[0][10], "uniform");
}

#[test]
fn json_output_and_unwritable_path() {
    let cache = tempfile::tempdir().unwrap();
    let json = cache.path().join("out.json");
    let args = ["--var", "snr_db", "--values", "0,10", "--trials", "3", "--format", "json", "--out"];
    let mut with_out: Vec<&str> = args.to_vec();
    with_out.push(json.to_str().unwrap());
    assert!(ftn(&with_out, cache.path()).status.success());
    let text = std::fs::read_to_string(&json).unwrap();
    assert!(text.contains("\"mean_se_bits_per_s_hz\""));

    let mut bad: Vec<&str> = args.to_vec();
    bad.push("/nonexistent-dir/out.json");
    let out = ftn(&bad, cache.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent-dir/out.json"));
}

#[test]
fn configuration_errors_before_work() {
    let cache = tempfile::tempdir().unwrap();
    for args in [
        vec!["--preset", "fig9"],
        vec!["--var", "N"],
        vec!["--var", "N", "--values", "20,10,30"],
        vec!["--var", "N", "--values", "10,20", "--dof"],
        vec!["--var", "N", "--values", "10", "--alloc", "greedy"],
    ] {
        let out = ftn(&args, cache.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn fig4_preset_fills_capacity_column() {
    let cache = tempfile::tempdir().unwrap();
    let out = ftn(&["--preset", "fig4", "--values", "0.67", "--trials", "4", "-n", "40"], cache.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for record in rows(&out.stdout) {
        let bound: f64 = record[16].parse().unwrap();
        let se: f64 = record[14].parse().unwrap();
        assert!(bound > se);
    }
}

#[test]
fn dof_report_on_snr_sweep() {
    let cache = tempfile::tempdir().unwrap();
    let out = ftn(
        &["--preset", "fig3", "--trials", "20", "--dof", "--dof-window", "20,30"],
        cache.path(),
    );
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("1x1 nyquist / 1x1 nyquist: 1.0000"), "{stderr}");
}
