use std::path::Path;
use std::process::{Command, Output};

use mimo_amc::report::{read_confusion_csv, read_results_csv, read_summary};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mimo-amc"))
        .args(args)
        .output()
        .expect("spawn mimo-amc")
}

fn synth(dir: &Path, scheme: &str, snr: &str) -> (String, String) {
    let meta = dir.join(format!("{scheme}.json")).display().to_string();
    let data = dir.join(format!("{scheme}.iq")).display().to_string();
    let out = cli(&[
        "synth", "--scheme", scheme, "--snr", snr, "--seed", "17", "--meta", &meta, "--data", &data,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    (meta, data)
}

#[test]
fn classify_file_reports_decision_and_weights() {
    let dir = tempfile::tempdir().unwrap();
    let (meta, data) = synth(dir.path(), "qpsk", "15");
    let out = cli(&["classify-file", "--meta", &meta, "--data", &data]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "decided: qpsk");
    // header plus one line per candidate
    assert_eq!(text.lines().count(), 6);
    let top = text.lines().nth(2).unwrap();
    assert!(top.trim_start().starts_with("qpsk"));
    assert!(top.contains('['));
}

#[test]
fn truncated_payload_is_rejected_with_offset() {
    let dir = tempfile::tempdir().unwrap();
    let (meta, data) = synth(dir.path(), "bpsk", "10");
    let mut bytes = std::fs::read(&data).unwrap();
    bytes.truncate(bytes.len() - 24);
    std::fs::write(&data, bytes).unwrap();
    let out = cli(&["classify-file", "--meta", &meta, "--data", &data]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("not a multiple of 64 bytes"), "{err}");
    assert!(err.contains("byte offset"), "{err}");
}

#[test]
fn missing_noise_variance_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let (meta, data) = synth(dir.path(), "8psk", "10");
    std::fs::write(&meta, r#"{"m_r": 4, "n": 512, "m_t": 2}"#).unwrap();
    let out = cli(&["classify-file", "--meta", &meta, "--data", &data]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("noise_variance"));
}

#[test]
fn sweep_writes_results_confusion_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = cli(&[
        "sweep",
        "--snr-min",
        "-5",
        "--snr-max",
        "5",
        "--snr-step",
        "5",
        "--trials",
        "4",
        "--symbols",
        "128",
        "--algos",
        "proposed,alrt_ub",
        "--seed",
        "3",
        "--threads",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let rows = read_results_csv(&out_dir.join("results.csv")).unwrap();
    assert_eq!(rows.len(), 3 * 2 * 4);
    assert!(rows.iter().all(|r| r.trials == 4));
    let conf = read_confusion_csv(&out_dir.join("confusion").join("alrt_ub_snr-5.csv")).unwrap();
    assert_eq!(conf.iter().map(|r| r.count).sum::<u64>(), 16);
    let summary = read_summary(&out_dir.join("summary.json")).unwrap();
    assert_eq!(summary.config.master_seed, 3);
    assert_eq!(summary.points.len(), 6);
}

#[test]
fn bad_arguments_fail_cleanly() {
    let out = cli(&["sweep", "--algos", "bogus", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("bogus"));

    let out = cli(&["sweep", "--mt", "4", "--mr", "2", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(2));

    let out = cli(&["reproduce", "--figure", "7"]);
    assert!(!out.status.success());
}
