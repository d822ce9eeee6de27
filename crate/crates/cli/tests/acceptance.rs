//! One test per acceptance criterion; cargo prints one ok/FAILED line each.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use collapse_spectra_cli::config::Tolerances;
use collapse_spectra_cli::criteria::{Context, CRITERIA};
use collapse_spectra_cli::verify::{BUDGET, DEFAULT_SEED};

fn criterion(id: u8) {
    let c = CRITERIA.iter().find(|c| c.id == id).expect("criterion exists");
    let ctx = Context {
        seed: DEFAULT_SEED,
        tol: Tolerances::default(),
    };
    let out = (c.run)(&ctx).unwrap_or_else(|e| panic!("criterion {id} errored: {e}"));
    let failed: Vec<String> = out
        .checks
        .iter()
        .filter(|k| !k.passed)
        .map(|k| format!("{} ({})", k.name, k.detail))
        .collect();
    println!(
        "criterion {id:>2} {}: {} ({} checks)",
        if failed.is_empty() { "PASS" } else { "FAIL" },
        c.title,
        out.checks.len()
    );
    assert!(failed.is_empty(), "criterion {id} failed: {failed:#?}");
}

#[test]
fn criterion_01_heisenberg() {
    criterion(1);
}

#[test]
fn criterion_02_closed_form_laplacian() {
    criterion(2);
}

#[test]
fn criterion_03_complex_validity() {
    criterion(3);
}

#[test]
fn criterion_04_kernel_dimension() {
    criterion(4);
}

#[test]
fn criterion_05_collapse_counts() {
    criterion(5);
}

#[test]
fn criterion_06_betti_numbers() {
    criterion(6);
}

#[test]
fn criterion_07_double_jordan() {
    criterion(7);
}

#[test]
fn criterion_08_bundle_spectrum() {
    criterion(8);
}

#[test]
fn criterion_09_contrasting_collapses() {
    criterion(9);
}

#[test]
fn criterion_10_flat_thresholds() {
    criterion(10);
}

#[test]
fn criterion_11_euler_bound() {
    criterion(11);
}

fn verify_all_into(dir: &Path) -> Duration {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_collapse-spectra"))
        .arg("verify-all")
        .arg("--out")
        .arg(dir)
        .env_remove("COLLAPSE_SPECTRA_OUT")
        .output()
        .expect("binary runs");
    let elapsed = start.elapsed();
    assert!(
        status.status.success(),
        "verify-all failed:\n{}",
        String::from_utf8_lossy(&status.stdout)
    );
    elapsed
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn criterion_12_verify_all_end_to_end() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ta = verify_all_into(a.path());
    let tb = verify_all_into(b.path());
    let fa = files(&a.path().join("verify-all"));
    let fb = files(&b.path().join("verify-all"));
    let csvs = fa.iter().filter(|(n, _)| n.ends_with(".csv")).count();
    println!(
        "criterion 12 {}: verify-all in {} ms and {} ms, {csvs} CSV files",
        if ta < BUDGET && tb < BUDGET && fa == fb { "PASS" } else { "FAIL" },
        ta.as_millis(),
        tb.as_millis()
    );
    assert!(ta < BUDGET && tb < BUDGET, "too slow: {ta:?}, {tb:?}");
    assert!(csvs >= 11);
    assert_eq!(
        fa.iter().map(|f| &f.0).collect::<Vec<_>>(),
        fb.iter().map(|f| &f.0).collect::<Vec<_>>()
    );
    for ((name, x), (_, y)) in fa.iter().zip(&fb) {
        assert!(x == y, "{name} differs between runs");
    }
}
