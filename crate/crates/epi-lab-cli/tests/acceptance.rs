//! Acceptance suite: one test per criterion, each printing its pass/fail
//! line. Tolerances are pinned inside `epi_lab_cli::battery`.
//!
//! Criteria 4, 8b, and 8c encode stated expectations that the measured
//! numbers contradict (constants and exponents of the residual decay); they
//! are asserted exactly as stated and fail. The measured values are printed
//! in the details and pinned by companion tests in the core crate.

use epi_lab_cli::battery::{self, CriterionOutcome};
use std::process::Command;

fn check(outcome: Result<CriterionOutcome, epi_lab_cli::CliError>) {
    let o = outcome.expect("criterion ran");
    println!(
        "[{}] criterion {:>2}: {} -- {}",
        if o.passed { "PASS" } else { "FAIL" },
        o.id,
        o.name,
        o.details
    );
    assert!(o.passed, "criterion {} failed: {}", o.id, o.details);
}

#[test]
fn acceptance_01_gaussian_closed_forms() {
    check(battery::criterion_01(false, 0));
}

#[test]
fn acceptance_02_derivative_identity() {
    check(battery::criterion_02(false, 0));
}

#[test]
fn acceptance_03_entropy_representation() {
    check(battery::criterion_03(false, 0));
}

#[test]
fn acceptance_04_highsnr_continuous() {
    check(battery::criterion_04(false, 0));
}

#[test]
fn acceptance_05_highsnr_discrete() {
    check(battery::criterion_05(false, 0));
}

#[test]
fn acceptance_06_mixed_limit_monotone() {
    check(battery::criterion_06(false, 0));
}

#[test]
fn acceptance_07_lowsnr_all_signals() {
    check(battery::criterion_07(false, 0));
}

#[test]
fn acceptance_08a_rate_uniform_d1() {
    check(battery::criterion_08a(false, 0));
}

#[test]
fn acceptance_08b_rate_pyramid_d1() {
    check(battery::criterion_08b(false, 0));
}

#[test]
fn acceptance_08c_rate_uniform_d2() {
    check(battery::criterion_08c(false, 0));
}

#[test]
fn acceptance_09_pyramid_closed_form() {
    check(battery::criterion_09(false, 0));
}

#[test]
fn acceptance_10_domination_bound() {
    check(battery::criterion_10(false, 0));
}

#[test]
fn acceptance_11_epi_battery() {
    check(battery::criterion_11(false, 0));
}

#[test]
fn acceptance_12_discrete_violation_demo() {
    check(battery::criterion_12(false, 0));
}

// Criterion 13 end-to-end: `verify-all` twice with one seed writes
// byte-identical CSVs (reduced grids, production code paths).
#[test]
fn acceptance_13_verify_all_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("run_a");
    let out_b = dir.path().join("run_b");
    for out in [&out_a, &out_b] {
        let r = Command::new(env!("CARGO_BIN_EXE_epi-lab"))
            .args([
                "verify-all",
                "--quick",
                "--seed",
                "7",
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .expect("binary runs");
        assert!(
            r.status.success(),
            "verify-all failed: {}",
            String::from_utf8_lossy(&r.stderr)
        );
    }
    let mut compared = 0;
    for entry in std::fs::read_dir(&out_a).unwrap() {
        let name = entry.unwrap().file_name();
        let a = std::fs::read(out_a.join(&name)).unwrap();
        let b = std::fs::read(out_b.join(&name)).unwrap();
        assert_eq!(a, b, "CSV bytes differ for {name:?}");
        compared += 1;
    }
    println!("[PASS] criterion 13: determinism -- {compared} files byte-identical");
    assert!(compared >= 16, "expected per-criterion CSVs plus summary");
}
