//! End-to-end runs of the installed binary: reproducibility, CSV schema,
//! fixed points, and error paths. Everything here runs on tiny images so the
//! whole file stays in the sub-second range per test.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_driftscale")
}

fn run(args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_err(args: &[&str]) -> String {
    let out = run(args);
    assert!(!out.status.success(), "command {args:?} should fail");
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Deterministic 8x8 P5 test image with a gradient texture.
fn write_test_pgm(path: &Path) {
    let mut bytes = b"P5\n8 8\n255\n".to_vec();
    for y in 0..8u16 {
        for x in 0..8u16 {
            bytes.push((16 + 3 * (8 * y + x)) as u8);
        }
    }
    std::fs::write(path, bytes).unwrap();
}

fn read_dir_sorted(dir: &Path) -> Vec<PathBuf> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    entries
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader
        .headers()
        .unwrap()
        .iter()
        .map(str::to_owned)
        .collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_owned).collect())
        .collect();
    (header, rows)
}

fn csv_file(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    parse_csv(&std::fs::read_to_string(path).unwrap())
}

#[test]
fn probdiff_runs_are_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    write_test_pgm(&input);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let out_c = dir.path().join("c");

    for (out, seed) in [(&out_a, "11"), (&out_b, "11"), (&out_c, "12")] {
        run_ok(&[
            "probdiff",
            input.to_str().unwrap(),
            "--record",
            "0,1,2,4",
            "--seed",
            seed,
            "--outdir",
            out.to_str().unwrap(),
        ]);
    }

    let names: Vec<String> = read_dir_sorted(&out_a)
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(
        names,
        [
            "entropy.csv",
            "frame_00000.pgm",
            "frame_00000.txt",
            "frame_00001.pgm",
            "frame_00001.txt",
            "frame_00002.pgm",
            "frame_00002.txt",
            "frame_00004.pgm",
            "frame_00004.txt",
        ]
    );

    let mut some_frame_differs = false;
    for name in &names {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        let c = std::fs::read(out_c.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        if name.ends_with(".pgm") && name != "frame_00000.pgm" && a != c {
            some_frame_differs = true;
        }
    }
    assert!(some_frame_differs, "seed must influence noised frames");
}

#[test]
fn probdiff_steps_zero_reemits_only_the_input_frame() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    write_test_pgm(&input);
    let out = dir.path().join("out");

    run_ok(&[
        "probdiff",
        input.to_str().unwrap(),
        "--steps",
        "0",
        "--outdir",
        out.to_str().unwrap(),
    ]);

    let names: Vec<String> = read_dir_sorted(&out)
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["entropy.csv", "frame_00000.pgm", "frame_00000.txt"]);
    let (_, rows) = csv_file(&out.join("entropy.csv"));
    assert!(rows.is_empty(), "no schedule rows for a zero-step run");
}

#[test]
fn probdiff_entropy_log_matches_the_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    write_test_pgm(&input);
    let out = dir.path().join("out");

    run_ok(&[
        "probdiff",
        input.to_str().unwrap(),
        "--beta",
        "0.02",
        "--record",
        "0,8",
        "--outdir",
        out.to_str().unwrap(),
    ]);

    let (header, rows) = csv_file(&out.join("entropy.csv"));
    assert_eq!(
        header,
        [
            "step",
            "beta",
            "alpha_bar",
            "conditional_entropy",
            "entropy_increment",
            "admissible",
            "margin"
        ]
    );
    assert_eq!(rows.len(), 8);

    // n = 64 elements, β = 0.02: both closed forms recomputed here.
    let n = 64.0_f64;
    let tau_e = std::f64::consts::TAU * std::f64::consts::E;
    let increment = n / 2.0 * tau_e.ln() + 0.5 * (0.98_f64 * 0.02).ln();
    let mut previous = f64::NEG_INFINITY;
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0], (i + 1).to_string());
        let alpha_bar: f64 = row[2].parse().unwrap();
        let cond: f64 = row[3].parse().unwrap();
        let inc: f64 = row[4].parse().unwrap();
        assert!((alpha_bar - 0.98_f64.powi(i as i32 + 1)).abs() < 1e-12);
        assert!((cond - n / 2.0 * (tau_e * (1.0 - alpha_bar)).ln()).abs() < 1e-9);
        assert!((inc - increment).abs() < 1e-9);
        assert_eq!(row[5], "true");
        assert!(cond > previous, "conditional entropy must increase");
        previous = cond;
    }
}

#[test]
fn osmosis_runs_are_byte_reproducible_and_conservative() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    write_test_pgm(&input);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");

    for out in [&out_a, &out_b] {
        run_ok(&[
            "osmosis",
            input.to_str().unwrap(),
            "--guidance",
            "noise:42",
            "--record",
            "0,1,2,4,8",
            "--outdir",
            out.to_str().unwrap(),
        ]);
    }

    for path in read_dir_sorted(&out_a) {
        let name = path.file_name().unwrap();
        let a = std::fs::read(&path).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name:?} differs between identical runs");
    }

    let (header, rows) = csv_file(&out_a.join("osmosis.csv"));
    assert_eq!(
        header,
        [
            "step",
            "mean_value",
            "relative_entropy",
            "solver_iterations",
            "max_relative_residual"
        ]
    );
    assert_eq!(rows.len(), 9, "one row per step, 0 through 8");

    let mean0: f64 = rows[0][1].parse().unwrap();
    let mut previous = f64::NEG_INFINITY;
    for row in &rows {
        let mean: f64 = row[1].parse().unwrap();
        assert!(
            (mean - mean0).abs() / mean0 < 1e-10,
            "mean must stay constant, step {} drifted to {mean}",
            row[0]
        );
        let entropy: f64 = row[2].parse().unwrap();
        assert!(
            entropy >= previous - 1e-12,
            "relative entropy must be monotone"
        );
        previous = entropy;
    }
}

#[test]
fn osmosis_with_guidance_equal_to_input_is_a_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    write_test_pgm(&input);
    let out = dir.path().join("out");

    run_ok(&[
        "osmosis",
        input.to_str().unwrap(),
        "--guidance",
        input.to_str().unwrap(),
        "--record",
        "0,8,32",
        "--outdir",
        out.to_str().unwrap(),
    ]);

    // A·v = 0 exactly, so every frame file is identical to the first.
    let base = std::fs::read(out.join("frame_00000.pgm")).unwrap();
    for step in ["frame_00008.pgm", "frame_00032.pgm"] {
        assert_eq!(
            std::fs::read(out.join(step)).unwrap(),
            base,
            "{step} moved away from the fixed point"
        );
    }
}

#[test]
fn osmosis_rejects_mismatched_guidance() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    write_test_pgm(&input);
    let other = dir.path().join("other.pgm");
    std::fs::write(&other, b"P5\n2 2\n255\n\x10\x20\x30\x40").unwrap();

    let stderr = run_err(&[
        "osmosis",
        input.to_str().unwrap(),
        "--guidance",
        other.to_str().unwrap(),
        "--outdir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(stderr.contains("does not match"), "stderr: {stderr}");
}

#[test]
fn fp_compare_writes_parseable_csv_to_stdout() {
    let out = run_ok(&[
        "fp-compare",
        "--samples",
        "10000",
        "--times",
        "5,10",
        "--grid",
        "-6,6,120",
        "--seed",
        "3",
    ]);
    let (header, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(
        header,
        ["step", "l1_distance", "beta_admissible_n1", "margin_n1"]
    );
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "5");
    assert_eq!(rows[1][0], "10");
    for row in &rows {
        let l1: f64 = row[1].parse().unwrap();
        assert!(l1.is_finite() && l1 >= 0.0);
        // β = 0.02 lies outside the n = 1 admissible interval.
        assert_eq!(row[2], "false");
    }
}

#[test]
fn fp_compare_refuses_small_sample_counts() {
    let stderr = run_err(&["fp-compare", "--samples", "500", "--times", "5"]);
    assert!(stderr.contains("samples"), "stderr: {stderr}");
}

#[test]
fn entropy_report_reads_schedule_files() {
    let dir = tempfile::tempdir().unwrap();
    let schedule = dir.path().join("schedule.txt");
    std::fs::write(&schedule, "0.1\n\n0.2\n0.3\n").unwrap();

    let out = run_ok(&[
        "entropy-report",
        "--schedule",
        schedule.to_str().unwrap(),
        "--n",
        "2",
    ]);
    let (header, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(header[0], "step");
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][1], "0.1");
    assert_eq!(rows[2][1], "0.3");

    // ∏(1−β_j) after the three steps: 0.9·0.8·0.7.
    let alpha_bar: f64 = rows[2][2].parse().unwrap();
    assert!((alpha_bar - 0.9 * 0.8 * 0.7).abs() < 1e-12);
}

#[test]
fn entropy_report_rejects_malformed_schedule_lines() {
    let dir = tempfile::tempdir().unwrap();
    let schedule = dir.path().join("schedule.txt");
    std::fs::write(&schedule, "0.1\nnot-a-number\n").unwrap();

    let stderr = run_err(&[
        "entropy-report",
        "--schedule",
        schedule.to_str().unwrap(),
        "--n",
        "2",
    ]);
    assert!(stderr.contains(":2:"), "line number missing: {stderr}");
}

#[test]
fn entropy_report_requires_exactly_one_schedule_source() {
    run_err(&["entropy-report", "--n", "2"]);
    let dir = tempfile::tempdir().unwrap();
    let schedule = dir.path().join("schedule.txt");
    std::fs::write(&schedule, "0.1\n").unwrap();
    run_err(&[
        "entropy-report",
        "--schedule",
        schedule.to_str().unwrap(),
        "--beta",
        "0.1",
        "--steps",
        "2",
        "--n",
        "2",
    ]);
}

#[test]
fn unsorted_record_lists_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    write_test_pgm(&input);
    let stderr = run_err(&[
        "probdiff",
        input.to_str().unwrap(),
        "--record",
        "4,2",
        "--outdir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(stderr.contains("sorted"), "stderr: {stderr}");
}
