//! Entry points shared by the binary and the acceptance tests.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::config::{validate_grid, ScenarioConfig};
use crate::criteria::{run_all, Context};
use crate::error::CliResult;
use crate::manifest::{write_run, RunManifest};
use crate::output::{Check, RunOutput, Table};
use crate::scenarios::{self, SCENARIOS};

pub const DEFAULT_SEED: u64 = 20_240_607;
pub const DEFAULT_OUT: &str = "collapse-spectra-out";
pub const OUT_ENV: &str = "COLLAPSE_SPECTRA_OUT";
/// Wall-clock budget of `verify-all`.
pub const BUDGET: Duration = Duration::from_secs(60);

/// Precedence: `--out`, then `$COLLAPSE_SPECTRA_OUT`, then `output_dir` from
/// the config, then [`DEFAULT_OUT`].
pub fn resolve_out_dir(flag: Option<&Path>, env: Option<&str>, cfg: &ScenarioConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| env.filter(|s| !s.is_empty()).map(PathBuf::from))
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Command-line overrides of a config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub eps_grid: Option<Vec<f64>>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ScenarioConfig) -> CliResult<()> {
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(g) = &self.eps_grid {
            cfg.eps_grid = Some(validate_grid(g.clone())?);
        }
        Ok(())
    }
}

pub struct Run {
    pub config: ScenarioConfig,
    pub output: RunOutput,
    pub manifest: RunManifest,
}

impl Run {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        write_run(dir, &self.output, &self.manifest)
    }

    /// One line per check.
    pub fn report(&self) -> Vec<String> {
        self.output
            .checks
            .iter()
            .map(|c| format!("{}  {}  ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail))
            .collect()
    }
}

pub fn run_scenario(name: &str, config_text: Option<&str>, overrides: &Overrides) -> CliResult<Run> {
    let scenario = scenarios::find(name)?;
    let mut config = scenario.config(config_text)?;
    overrides.apply(&mut config)?;
    let output = (scenario.run)(&config)?;
    let manifest = RunManifest::new(scenario.name, scenario.citation, config.hash(), config.seed, &output);
    Ok(Run {
        config,
        output,
        manifest,
    })
}

/// `name, theorem tag, default config`, alphabetical.
pub fn list_scenarios() -> Table {
    let mut t = Table::new(&["name", "citation", "default_config"]);
    for s in &SCENARIOS {
        t.push(vec![s.name.into(), s.citation.into(), s.default_summary().into()]);
    }
    t
}

pub struct Verification {
    pub run: Run,
    /// One line per acceptance criterion, with timings.
    pub lines: Vec<String>,
}

/// Runs acceptance criteria 1–11 and judges criterion 12 on the total wall
/// time. A config may set `seed` and `[tolerances]`, nothing else.
pub fn verify_all(config_text: Option<&str>, overrides: &Overrides) -> CliResult<Verification> {
    let mut config = match config_text {
        Some(text) => ScenarioConfig::parse(text, "verify-all")?,
        None => ScenarioConfig::empty("verify-all"),
    };
    config.params.check_keys(&[])?;
    if config.eps_grid.is_some() {
        return Err(crate::CliError::config("eps_grid", "verify-all uses fixed grids"));
    }
    overrides.apply(&mut config)?;
    let seed = config.seed.unwrap_or(DEFAULT_SEED);
    config.seed = Some(seed);
    let ctx = Context {
        seed,
        tol: config.tolerances,
    };

    let start = Instant::now();
    let results = run_all(&ctx)?;
    let total = start.elapsed();

    let mut output = RunOutput::default();
    let mut summary = Table::new(&["criterion", "title", "passed", "checks", "worst_margin"]);
    let mut lines = Vec::new();
    for r in results {
        let passed = r.output.passed();
        let margin = r.output.worst_margin();
        summary.push(vec![
            (r.id as usize).into(),
            r.title.into(),
            passed.into(),
            r.output.checks.len().into(),
            margin.into(),
        ]);
        lines.push(format!(
            "criterion {:>2}  {}  {}  [{} checks, worst margin {}, {} ms]",
            r.id,
            if passed { "PASS" } else { "FAIL" },
            r.title,
            r.output.checks.len(),
            margin.map_or("n/a".to_string(), |m| format!("{m:.3e}")),
            r.elapsed.as_millis()
        ));
        output.absorb(&format!("c{:02}", r.id), r.output);
    }
    let in_budget = total < BUDGET;
    let title = "verify-all within 60 s, CSV bodies hashed in the manifest";
    summary.push(vec![12usize.into(), title.into(), in_budget.into(), 1usize.into(), None.into()]);
    output.check(Check::new("c12: wall time under 60 s", in_budget, "budget 60 s"));
    lines.push(format!(
        "criterion 12  {}  {title}  [{} ms total]",
        if in_budget { "PASS" } else { "FAIL" },
        total.as_millis()
    ));
    output.artifacts.insert(0, crate::output::Artifact::table("summary.csv", &summary));
    let manifest = RunManifest::new(
        "verify-all",
        "all acceptance criteria",
        config.hash(),
        config.seed,
        &output,
    );
    Ok(Verification {
        run: Run {
            config,
            output,
            manifest,
        },
        lines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_dir_precedence() {
        let mut cfg = ScenarioConfig::empty("x");
        assert_eq!(resolve_out_dir(None, None, &cfg), PathBuf::from(DEFAULT_OUT));
        cfg.output_dir = Some("from_config".into());
        assert_eq!(resolve_out_dir(None, None, &cfg), PathBuf::from("from_config"));
        assert_eq!(resolve_out_dir(None, Some("env"), &cfg), PathBuf::from("env"));
        assert_eq!(resolve_out_dir(None, Some(""), &cfg), PathBuf::from("from_config"));
        assert_eq!(resolve_out_dir(Some(Path::new("flag")), Some("env"), &cfg), PathBuf::from("flag"));
    }

    #[test]
    fn listing_is_alphabetical() {
        let csv = list_scenarios().to_csv();
        assert!(csv.contains("heisenberg"));
        assert!(csv.contains("gt-family"));
        assert_eq!(csv.lines().count(), SCENARIOS.len() + 1);
    }

    #[test]
    fn heisenberg_run_and_overrides() {
        let run = run_scenario("heisenberg", None, &Overrides::default()).unwrap();
        assert!(run.output.passed());
        let body = &run.output.artifacts[0].body;
        // (α, β, γ) = (1, 1, 3): λ = ε²
        let first = body.lines().nth(1).unwrap();
        assert!(first.starts_with("1.0,1.0,3.0,1.0,0.5,"), "{first}");
        let other = run_scenario(
            "heisenberg",
            None,
            &Overrides {
                seed: None,
                eps_grid: Some(vec![0.25]),
            },
        )
        .unwrap();
        assert_ne!(run.manifest.config_sha256, other.manifest.config_sha256);
        assert!(run_scenario(
            "heisenberg",
            None,
            &Overrides {
                seed: None,
                eps_grid: Some(vec![1.5]),
            }
        )
        .is_err());
    }

    #[test]
    fn zero_log_gives_zero_spectra() {
        let run = run_scenario("mapping-torus", Some("[params]\nB = \"0 0\\n0 0\"\nA = \"1 0\\n0 1\""), &Overrides::default())
            .unwrap();
        assert!(run.output.passed(), "{:?}", run.report());
        let collapse = &run.output.artifacts[0].body;
        for line in collapse.lines().skip(1) {
            let cells: Vec<&str> = line.split(',').collect();
            assert!(cells[1..4].iter().all(|c| *c == "0.0"), "{line}");
        }
    }

    #[test]
    fn verify_all_rejects_bad_tolerances() {
        let err = verify_all(Some("[tolerances]\nduality = 2.0"), &Overrides::default());
        assert!(matches!(err, Err(crate::CliError::ConfigInvalid { ref key, .. }) if key == "tolerances.duality"));
        let err = verify_all(Some("[params]\nx = 1"), &Overrides::default());
        assert!(matches!(err, Err(crate::CliError::ConfigInvalid { ref key, .. }) if key == "params.x"));
    }
}
