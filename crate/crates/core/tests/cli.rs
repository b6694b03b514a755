use std::process::{Command, Output};

fn mcrp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcrp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn split(line: &str) -> Vec<&str> {
    line.split_whitespace().collect()
}

fn stdout(args: &[&str]) -> String {
    let out = mcrp(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn factorize_and_compose_round_trip() {
    assert_eq!(
        stdout(&split("factorize 3 1 2 4 4 1 2 4 1 4")).trim(),
        "(3 1)(1)(2 4 2 4 4 1)(4)"
    );
    assert_eq!(
        stdout(&["compose", "(3 1)(1)(2 4 2 4 4 1)(4)"]).trim(),
        "3 1 2 4 4 1 2 4 1 4"
    );
    assert_eq!(stdout(&["factorize", "2 1 2"]).trim(), "(2 1)(2)");
}

#[test]
fn compose_rejects_non_canonical_input() {
    let out = mcrp(&["compose", "(1 2)"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn kpmf_json_schema() {
    let doc: serde_json::Value =
        serde_json::from_str(&stdout(&split("kpmf --profile 1,2 --theta 2"))).unwrap();
    assert_eq!(doc["support_min"], 1);
    assert_eq!(
        doc["probabilities"],
        serde_json::json!(["1/7", "2/7", "4/7"])
    );
}

#[test]
fn sample_formats() {
    let words = stdout(&split(
        "sample --profile 3,2,1,4 --theta 1/2 --count 5 --seed 42",
    ));
    assert_eq!(words.lines().count(), 5);
    for line in words.lines() {
        let mut letters: Vec<u32> = line
            .split_whitespace()
            .map(|s| s.parse().unwrap())
            .collect();
        letters.sort_unstable();
        assert_eq!(letters, [1, 1, 1, 2, 2, 3, 4, 4, 4, 4]);
    }
    let json = stdout(&split(
        "sample --profile 3,2,1,4 --count 5 --seed 42 --format json",
    ));
    let records: Vec<serde_json::Value> = serde_json::from_str(&json).unwrap();
    for r in &records {
        let steps: u64 = r["step_counts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap())
            .sum();
        assert_eq!(r["cycle_count"].as_u64().unwrap(), steps);
        let recomposed = stdout(&["compose", r["cycles"].as_str().unwrap()]);
        assert_eq!(recomposed.trim(), r["word"].as_str().unwrap());
    }
}

#[test]
fn outputs_do_not_depend_on_threads() {
    let runs = [
        split("sample --profile 2,3,1 --theta 3/2 --count 400 --seed 7 --format csv"),
        split("clt --profile-gen const:2 --t 200 --theta 2 --replicates 2000 --seed 7 --values"),
        split("law-check --profile 1,2 --replicates 3000 --seed 7 --values"),
    ];
    for args in runs {
        let one = stdout(&[&["--threads", "1"], args.as_slice()].concat());
        let many = stdout(&[&["--threads", "6"], args.as_slice()].concat());
        assert_eq!(one, many, "{args:?}");
    }
}

#[test]
fn law_check_exit_codes() {
    assert!(
        mcrp(&split("law-check --profile 1,2 --replicates 3000 --seed 1"))
            .status
            .success()
    );
    // No p-value exceeds 1, so this threshold must fail.
    let out = mcrp(&split(
        "law-check --profile 1,2 --replicates 3000 --seed 1 --min-p 1",
    ));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn clt_reports_degenerate_horizon() {
    let doc: serde_json::Value = serde_json::from_str(&stdout(&split(
        "clt --profile-gen const:3 --t 1 --replicates 10",
    )))
    .unwrap();
    assert_eq!(doc["degenerate"], true);
    assert!(doc.get("ks").is_none());
    assert!(doc.get("wall_clock_ms").is_none());
}

#[test]
fn verify_small_sizes() {
    let out = stdout(&split("verify --max-size 4"));
    assert!(out.lines().all(|l| l.starts_with("PASS")), "{out}");
}

#[test]
fn tables_as_csv() {
    let growth = stdout(&split("growth --profile-gen ones --t 1,10"));
    let mut lines = growth.lines();
    assert_eq!(
        lines.next(),
        Some("t,mean,variance,mean_over_log,variance_over_log,mean_over_scaled_log")
    );
    assert_eq!(lines.next(), Some("1,1,0,,,"));
    let tv = stdout(&split("tv-curve --min-exp 0 --max-exp 3"));
    assert_eq!(tv.lines().count(), 5);
    let traj = stdout(&split(
        "trajectory --profile-gen const:3 --t 1,100 --seed 4",
    ));
    assert!(traj.lines().nth(1).unwrap().starts_with("1,3,3,1,"));
}

#[test]
fn bad_arguments_are_reported() {
    assert_eq!(mcrp(&split("kpmf --profile 1,x")).status.code(), Some(2));
    assert_eq!(mcrp(&split("tv-curve --max-exp 20")).status.code(), Some(2));
    assert_eq!(mcrp(&split("factorize 0 1")).status.code(), Some(2));
}
