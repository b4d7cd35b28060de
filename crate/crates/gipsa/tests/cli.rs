//! End-to-end checks of the `gipsa` binary: byte-determinism of `gen`,
//! the files `solve` leaves behind, `validate` exit codes, and flag/config
//! precedence. Everything runs through the compiled executable.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gipsa::bench::{format_trace_csv, parse_trace_csv};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gipsa"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn gipsa");
    assert!(
        out.status.success(),
        "command failed with {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(cmd: &mut Command) -> i32 {
    cmd.output()
        .expect("spawn gipsa")
        .status
        .code()
        .expect("exit code")
}

fn gen_small(out: &Path, seed: u64) {
    run_ok(bin().args([
        "gen",
        "--out",
        out.to_str().unwrap(),
        "--n",
        "60",
        "--m",
        "30",
        "--nnz",
        "8",
        "--sigma2",
        "0.04",
        "--seed",
        &seed.to_string(),
    ]));
}

#[test]
fn gen_writes_identical_bytes_for_identical_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    gen_small(&a, 5);
    gen_small(&b, 5);
    let bytes_a = fs::read(&a).unwrap();
    assert_eq!(bytes_a, fs::read(&b).unwrap());

    // A different seed must actually change the payload.
    let c = dir.path().join("c.json");
    gen_small(&c, 6);
    assert_ne!(bytes_a, fs::read(&c).unwrap());
}

#[test]
fn solve_writes_parseable_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    gen_small(&inst, 7);
    let out_dir = dir.path().join("out");
    let out = run_ok(bin().args([
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--algorithms",
        "fbs,ifbs:star,fista-cd-re",
        "--tols",
        "1e-2,1e-6",
    ]));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("30x60"), "stdout: {stdout}");

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["generator"], "splitmix64-as241-v1");
    assert_eq!(summary["algorithms"].as_array().unwrap().len(), 3);
    assert_eq!(summary["instance"]["seed"], 7);

    for label in ["fbs", "ifbs-star", "fista-cd-re"] {
        let path = out_dir.join(format!("trace-{label}.csv"));
        let text = fs::read_to_string(&path).unwrap();
        let rows = parse_trace_csv(&text).unwrap();
        assert!(!rows.is_empty(), "{label}: empty trace");
        assert!(rows.iter().enumerate().all(|(i, r)| r.k == i + 1));
        // The writer promises lossless text: format(parse(text)) == text.
        assert_eq!(format_trace_csv(&rows), text, "{label}: lossy round trip");
    }

    // The gap column must actually certify convergence for this easy instance.
    let fbs = parse_trace_csv(&fs::read_to_string(out_dir.join("trace-fbs.csv")).unwrap()).unwrap();
    assert!(fbs.last().unwrap().f_gap <= 1e-9 * fbs.first().unwrap().f_gap.max(1.0));
}

#[test]
fn validate_reports_schedule_verdicts_through_exit_codes() {
    // Comfortably inside the feasible region.
    assert_eq!(
        exit_code(bin().args(["validate", "--schedule", "ifbs:0.4", "--lipschitz", "2.5"])),
        0
    );
    // Outside the region: eps = 2 - 2.6*0.5 - 2*0.5 = -0.3.
    assert_eq!(
        exit_code(bin().args([
            "validate",
            "--schedule",
            "ifbs:0.5@2.6",
            "--lipschitz",
            "1.0"
        ])),
        1
    );
    // Not covered by the global condition but by the dedicated lemma.
    assert_eq!(
        exit_code(bin().args(["validate", "--schedule", "fista-cd", "--lipschitz", "1.0"])),
        0
    );
    // Usage errors: unparseable schedule, and no Lipschitz source at all.
    assert_eq!(
        exit_code(bin().args(["validate", "--schedule", "warp-drive", "--lipschitz", "1.0"])),
        2
    );
    assert_eq!(exit_code(bin().args(["validate", "--schedule", "fbs"])), 2);
}

#[test]
fn validate_json_output_is_machine_readable() {
    let out = run_ok(bin().args([
        "validate",
        "--schedule",
        "gipsa:0.3:0.5@1.2",
        "--lipschitz",
        "1.0",
        "--json",
    ]));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["satisfies_global_theorem"], true);
    assert!(report["epsilon_margin"].as_f64().unwrap() > 0.0);
}

#[test]
fn validate_resolves_star_momentum_from_an_instance_file() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    gen_small(&inst, 11);
    let out = run_ok(bin().args([
        "validate",
        "--schedule",
        "ifbs:star",
        "--instance",
        inst.to_str().unwrap(),
        "--json",
    ]));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["satisfies_global_theorem"], true);
}

#[test]
fn config_file_fills_gaps_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gen.json");
    fs::write(
        &cfg,
        r#"{"n": 60, "m": 30, "nnz": 8, "sigma2": 0.04, "seed": 5}"#,
    )
    .unwrap();

    // Config alone must reproduce the flag-built instance bit for bit.
    let from_flags = dir.path().join("flags.json");
    gen_small(&from_flags, 5);
    let from_cfg = dir.path().join("cfg.json");
    run_ok(bin().args([
        "gen",
        "--out",
        from_cfg.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ]));
    assert_eq!(fs::read(&from_flags).unwrap(), fs::read(&from_cfg).unwrap());

    // An explicit flag beats the config value.
    let overridden = dir.path().join("override.json");
    run_ok(bin().args([
        "gen",
        "--out",
        overridden.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "6",
    ]));
    let expect = dir.path().join("seed6.json");
    gen_small(&expect, 6);
    assert_eq!(fs::read(&overridden).unwrap(), fs::read(&expect).unwrap());

    // Unknown config fields are rejected, not ignored.
    fs::write(&cfg, r#"{"n": 60, "bogus": 1}"#).unwrap();
    assert_eq!(
        exit_code(bin().args([
            "gen",
            "--out",
            dir.path().join("x.json").to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap(),
        ])),
        2
    );
}

#[test]
fn missing_instance_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "solve",
            "--instance",
            dir.path().join("absent.json").to_str().unwrap(),
            "--out-dir",
            dir.path().join("out").to_str().unwrap(),
        ])
        .output()
        .expect("spawn gipsa");
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error:"), "stderr: {stderr}");
}

#[test]
fn trials_writes_csv_and_json_with_matching_cells() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("trials");
    run_ok(bin().args([
        "trials",
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--n",
        "60",
        "--m",
        "30",
        "--nnz",
        "8",
        "--sigma2",
        "0.04",
        "--trials",
        "8",
        "--algorithms",
        "fbs,fista-cd-re",
        "--tols",
        "1e-4",
    ]));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("trials.json")).unwrap()).unwrap();
    assert_eq!(report["num_trials"], 8);
    let cells = report["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 2);
    let csv = fs::read_to_string(out_dir.join("trials.csv")).unwrap();
    // Header plus one line per (algorithm, tolerance) cell.
    assert_eq!(csv.lines().count(), 1 + cells.len());
    for cell in cells {
        assert!(csv.contains(cell["descriptor"].as_str().unwrap()));
    }
}
