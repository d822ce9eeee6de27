use std::process::{Command, Output};

fn run(args: &[&str], out_env: Option<&std::path::Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_collapse-spectra"));
    cmd.args(args).env_remove("COLLAPSE_SPECTRA_OUT");
    if let Some(dir) = out_env {
        cmd.env("COLLAPSE_SPECTRA_OUT", dir);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_is_alphabetical() {
    let o = run(&["list"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let names: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort_unstable();
    assert_eq!(names, sorted);
    assert!(names.contains(&"heisenberg") && names.contains(&"gt-family"));
    assert!(names.len() >= 10);
}

#[test]
fn unknown_scenario_exits_2() {
    let o = run(&["no-such-scenario"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown scenario"));
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[params]\nB = \"\"\"\n0 1\n0\n\"\"\"\n").unwrap();
    let o = run(&["mapping-torus", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("params.B"), "{}", stderr(&o));

    std::fs::write(&cfg, "[tolerances]\nchain = 0\n").unwrap();
    let o = run(&["verify-all", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("tolerances.chain"), "{}", stderr(&o));

    let o = run(&["heisenberg", "--eps-grid", "0.5,2", "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("eps_grid"));
}

#[test]
fn failing_check_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    // eigenvalues of C·Cᵀ are 1e-6, below the empirical floor
    std::fs::write(&cfg, "[params]\nB = \"\"\"\n0.001 0\n0 -0.001\n\"\"\"\n").unwrap();
    let o = run(&["mapping-torus", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    let manifest = std::fs::read_to_string(dir.path().join("mapping-torus/manifest.json")).unwrap();
    assert!(manifest.contains("\"passed\": false"));
}

#[test]
fn env_var_sets_output_and_runs_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["heisenberg", "--seed", "3"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read(dir.path().join("heisenberg/heisenberg.csv")).unwrap();
    let manifest = std::fs::read(dir.path().join("heisenberg/manifest.json")).unwrap();
    let again = tempfile::tempdir().unwrap();
    run(&["heisenberg", "--seed", "3", "--out", again.path().to_str().unwrap()], Some(dir.path()));
    assert_eq!(csv, std::fs::read(again.path().join("heisenberg/heisenberg.csv")).unwrap());
    assert_eq!(manifest, std::fs::read(again.path().join("heisenberg/manifest.json")).unwrap());

    let m: serde_json::Value = serde_json::from_slice(&manifest).unwrap();
    assert_eq!(m["scenario"], "heisenberg");
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["artifacts"][0]["file"], "heisenberg.csv");
    assert!(m["citation"].as_str().unwrap().contains("ε^(2τ)"));
    assert!(m["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn every_scenario_passes_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let list = stdout(&run(&["list"], None));
    for name in list.lines().skip(1).map(|l| l.split(',').next().unwrap()) {
        let o = run(&[name, "--out", dir.path().to_str().unwrap()], None);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
        assert!(dir.path().join(name).join("manifest.json").exists());
    }
}
