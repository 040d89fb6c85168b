use std::path::Path;
use std::process::Command;

use oee_ca::eca::ClassTable;
use oee_ca::ensemble::{aggregate, run_ensemble, EnsembleReport, SamplePlan};
use oee_ca::io::{read_records_csv, write_records_csv, Metadata};
use oee_ca::variants::Variant;

fn oee(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_oee")).current_dir(dir).args(args).output().unwrap()
}

fn small_plan(variant: Variant, w_o: usize, w_e: usize, samples: u64) -> SamplePlan {
    let mut plan = SamplePlan::new(variant, w_o, w_e, samples, 11);
    plan.norm_samples = 20;
    plan.norm_steps = 512;
    plan
}

#[test]
fn records_round_trip_reproduces_report() {
    let dir = tempfile::tempdir().unwrap();
    let classes = ClassTable::bundled();
    for plan in [
        small_plan(Variant::Case1, 4, 6, 800),
        small_plan(Variant::Case2, 3, 8, 500),
        small_plan(Variant::Case3, 4, 0, 300),
        small_plan(Variant::Eca, 4, 0, 200),
    ] {
        let records = run_ensemble(&plan).unwrap();
        let path = dir.path().join(format!("{}.csv", plan.variant));
        write_records_csv(&records, &Metadata::new("test"), &path).unwrap();
        let back = read_records_csv(&path).unwrap();
        assert_eq!(back, records);
        assert_eq!(aggregate(&back, classes).unwrap(), aggregate(&records, classes).unwrap());
    }
}

#[test]
fn analyze_matches_ensemble_report() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "ensemble", "--variant", "case1", "--wo", "3", "--we", "3", "--samples", "1500", "--seed", "5",
        "--norm-samples", "20", "--norm-steps", "256",
    ];
    let out = oee(dir.path(), &base);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = oee(dir.path(), &["analyze", "--records", "records.csv", "--out-dir", "an"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let read = |p: &str| -> EnsembleReport {
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join(p)).unwrap()).unwrap();
        serde_json::from_value(v["report"].clone()).unwrap()
    };
    assert_eq!(read("report.json"), read("an/report.json"));
    for svg in ["t_r_histogram.svg", "box_plots.svg", "innovation_scatter.svg", "c_heatmap.svg", "k_heatmap.svg"] {
        let text = std::fs::read_to_string(dir.path().join("an").join(svg)).unwrap();
        assert!(text.starts_with("<svg"), "{svg}");
    }
}

#[test]
fn eca_control_has_no_oee() {
    let dir = tempfile::tempdir().unwrap();
    let out = oee(
        dir.path(),
        &["ensemble", "--variant", "eca", "--wo", "4", "--samples", "1000", "--seed", "1", "--norm-samples", "10", "--norm-steps", "256"],
    );
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(v["report"]["oee_percent"], 0.0);
    assert_eq!(v["metadata"]["config"]["samples"], "1000");
    assert_eq!(v["metadata"]["sample_space"], "1408");
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str, threads: &'static str| {
        vec![
            "ensemble", "--variant", "case1", "--ratio", "3/2", "--wo", "4", "--samples", "2000", "--seed", "3",
            "--norm-samples", "20", "--norm-steps", "256", "--threads", threads, "--out", out, "--report", "r.json",
        ]
    };
    assert!(oee(dir.path(), &args("one.csv", "1")).status.success());
    assert!(oee(dir.path(), &args("four.csv", "4")).status.success());
    let one = std::fs::read(dir.path().join("one.csv")).unwrap();
    assert_eq!(one, std::fs::read(dir.path().join("four.csv")).unwrap());
    assert!(String::from_utf8_lossy(&one).contains("# w_e = 6"));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.conf"), "variant = case2\nwo = 3\nsamples = 50\nnorm_samples = 5\nnorm_steps = 64\n").unwrap();
    let out = oee(dir.path(), &["--config", "c.conf", "ensemble", "--samples", "40"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_records_csv(&dir.path().join("records.csv")).unwrap();
    assert_eq!(rows.len(), 40);
    assert!(rows.iter().all(|r| r.variant == Variant::Case2 && r.w_e == 8));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(oee(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(oee(dir.path(), &["ensemble", "--variant", "case2", "--wo", "3", "--we", "4"]).status.code(), Some(2));
    assert_eq!(oee(dir.path(), &["ensemble", "--variant", "case9", "--wo", "3"]).status.code(), Some(2));
    assert_eq!(oee(dir.path(), &["analyze", "--records", "missing.csv"]).status.code(), Some(3));
    std::fs::write(dir.path().join("bad.csv"), "not,a,records,file\n").unwrap();
    let out = oee(dir.path(), &["analyze", "--records", "bad.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
    assert_eq!(oee(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn identity_rule_render_repeats_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = oee(
        dir.path(),
        &["run", "--variant", "eca", "--wo", "9", "--rule-o", "204", "--state-o", "101100111", "--steps", "5", "--pgm", "id.pgm"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let pgm = std::fs::read(dir.path().join("id.pgm")).unwrap();
    let header = b"P5\n9 6\n255\n";
    assert_eq!(&pgm[..header.len()], header);
    let px = &pgm[header.len()..];
    assert_eq!(&px[..9], &[255, 0, 255, 255, 0, 0, 255, 255, 255]);
    assert!(px.chunks(9).all(|r| r == &px[..9]));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 7);
}

#[test]
fn wide_render_has_requested_shape() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["render", "--variant", "case1", "--wo", "101", "--we", "101", "--steps", "400", "--seed", "7"];
    assert!(oee(dir.path(), &args).status.success());
    let pgm = std::fs::read(dir.path().join("render.pgm")).unwrap();
    let header = b"P5\n101 400\n255\n";
    assert_eq!(&pgm[..header.len()], header);
    assert_eq!(pgm.len(), header.len() + 101 * 400);
    assert!(pgm[header.len()..].iter().all(|&p| p == 0 || p == 255));
}

#[test]
fn norm_cache_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let out = oee(dir.path(), &["norm", "--width", "6,8", "--samples", "10", "--steps", "128", "--cache", "norm.txt"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("norm.txt")).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("6 10 128 0 "));
    let out = oee(
        dir.path(),
        &["ensemble", "--variant", "case1", "--wo", "4", "--we", "4", "--samples", "30", "--norm-samples", "10", "--norm-steps", "128", "--norm-cache", "norm.txt"],
    );
    assert!(out.status.success());
    let bits: u64 = text.lines().nth(1).unwrap().split(' ').nth(4).unwrap().parse().unwrap();
    let rows = read_records_csv(&dir.path().join("records.csv")).unwrap();
    assert!(rows.iter().all(|r| r.norm_bits == Some(bits)));
}

#[test]
fn oracle_cache_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = oee(dir.path(), &["oracle", "--wo", "3", "--cache", "o3.bin", "--verify", "300"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("agreement 300/300"));
    assert!(dir.path().join("o3.bin").exists());
}
