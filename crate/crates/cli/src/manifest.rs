//! JSON manifest written next to the CSV files of every run.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::RunOutput;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    pub margin: Option<f64>,
    pub detail: String,
}

/// Contains no timestamps or paths, so identical runs give identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub scenario: String,
    pub citation: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub artifacts: Vec<ArtifactEntry>,
    pub checks: Vec<CheckEntry>,
    pub passed: bool,
}

impl RunManifest {
    pub fn new(scenario: &str, citation: &str, config_sha256: String, seed: Option<u64>, out: &RunOutput) -> Self {
        Self {
            scenario: scenario.to_string(),
            citation: citation.to_string(),
            config_sha256,
            seed,
            artifacts: out
                .artifacts
                .iter()
                .map(|a| ArtifactEntry {
                    file: a.file.clone(),
                    sha256: a.sha256(),
                    rows: a.rows(),
                })
                .collect(),
            checks: out
                .checks
                .iter()
                .map(|c| CheckEntry {
                    name: c.name.clone(),
                    passed: c.passed,
                    margin: c.margin.filter(|m| m.is_finite()),
                    detail: c.detail.clone(),
                })
                .collect(),
            passed: out.passed(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes every artifact and `manifest.json` into `dir`.
pub fn write_run(dir: &Path, out: &RunOutput, manifest: &RunManifest) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for a in &out.artifacts {
        let path = dir.join(&a.file);
        fs::write(&path, &a.body).map_err(io_err(&path))?;
    }
    let path = dir.join("manifest.json");
    fs::write(&path, manifest.to_json()).map_err(io_err(&path))
}
