//! Built-in scenarios. Each one has a default TOML config; a user config is
//! merged over it key by key.

mod bundle;
mod euler;
mod flat;
mod heisenberg;
mod mapping;

use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};
use crate::output::RunOutput;

pub use bundle::{run_tore_ex1, run_tore_ex2, run_torus_bundle};
pub use euler::{run_euler_bound, run_vol_bound};
pub use flat::{run_flat_threshold, run_gt_family};
pub use heisenberg::run_heisenberg;
pub use mapping::{run_double_jordan, run_mapping_torus, run_rotation};

pub struct Scenario {
    pub name: &'static str,
    /// The statement the scenario exercises.
    pub citation: &'static str,
    pub params: &'static [&'static str],
    pub default_config: &'static str,
    pub run: fn(&ScenarioConfig) -> CliResult<RunOutput>,
}

impl Scenario {
    /// Default config merged with `user` (if any), validated against the
    /// scenario's parameter names.
    pub fn config(&self, user: Option<&str>) -> CliResult<ScenarioConfig> {
        let mut cfg = ScenarioConfig::parse(self.default_config, self.name)?;
        if let Some(text) = user {
            let u = ScenarioConfig::parse(text, self.name)?;
            u.params.check_keys(self.params)?;
            cfg.seed = u.seed.or(cfg.seed);
            cfg.eps_grid = u.eps_grid.or(cfg.eps_grid);
            cfg.output_dir = u.output_dir;
            cfg.tolerances = u.tolerances;
            // the monodromy A = exp(B) is tied to B; a new B drops the default A
            if u.params.contains("B") && !u.params.contains("A") {
                cfg.params.remove("A");
            }
            cfg.params.merge(u.params);
        }
        Ok(cfg)
    }

    /// Default config on one line, for listings.
    pub fn default_summary(&self) -> String {
        self.default_config
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with("scenario"))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Alphabetical by name.
pub static SCENARIOS: [Scenario; 11] = [
    Scenario {
        name: "euler-bound",
        citation: "Euler map bound: λ₁(e*e) ≥ (Det e)²/‖e‖^(2k−2) and Det e = Det′e·Vol(Tᵏ)",
        params: &["trials", "k_max", "entry_bound", "noninjective", "rho_dims"],
        default_config: "seed = 31\n[params]\ntrials = 50\nk_max = 4\nentry_bound = 4\nnoninjective = 10\nrho_dims = [2, 3]\n",
        run: run_euler_bound,
    },
    Scenario {
        name: "ex-2-6-1",
        citation: "double Jordan block suspension: smallest Δ² eigenvalue decays like ε²",
        params: &["alpha"],
        default_config: "eps_grid = \"dyadic:4:10\"\n[params]\nalpha = 1.0\n",
        run: run_double_jordan,
    },
    Scenario {
        name: "ex-2-6-2",
        citation: "rotation suspension of T²: b₁ = 3 with one invariant harmonic 1-form",
        params: &[],
        default_config: "[params]\n",
        run: run_rotation,
    },
    Scenario {
        name: "flat-threshold",
        citation: "flat products: eigenforms below λ₀,₁(fiber) are fiber-invariant, threshold attained",
        params: &["base_gram", "fiber_gram", "degrees", "cutoff_factor", "samples", "resolution"],
        default_config: "seed = 24\n[params]\nbase_gram = \"1\"\nfiber_gram = \"0.25\"\ndegrees = [0, 1, 2]\ncutoff_factor = 1.5\nsamples = 10\nresolution = 200\n",
        run: run_flat_threshold,
    },
    Scenario {
        name: "gt-family",
        citation: "flat tori g_t: spectrum periodic in t and λ₀,₁ ≥ (π/diam)²",
        params: &["t", "cutoff", "resolution"],
        default_config: "[params]\nt = [0.0, 0.3, 0.5, 1.25]\ncutoff = 200.0\nresolution = 200\n",
        run: run_gt_family,
    },
    Scenario {
        name: "heisenberg",
        citation: "Heisenberg nilmanifold collapse: λ = ε^(2τ), τ = γ − α − β",
        params: &["exponents"],
        default_config: "eps_grid = [0.5, 0.1, 0.01]\n[params]\nexponents = [[1.0, 1.0, 3.0], [1.0, 1.0, 2.0]]\n",
        run: run_heisenberg,
    },
    Scenario {
        name: "mapping-torus",
        citation: "suspensions of SL(n,ℤ): dim ker Δ¹ = d′+1 and exactly k ≤ d−d′ small eigenvalues",
        params: &["B", "A", "k", "trials", "curvature_cap"],
        default_config: "seed = 6\neps_grid = \"dyadic:1:10\"\n[params]\nB = \"\"\"\n0 1\n0 0\n\"\"\"\nA = \"\"\"\n1 1\n0 1\n\"\"\"\ntrials = 50\ncurvature_cap = 1.0\n",
        run: run_mapping_torus,
    },
    Scenario {
        name: "tore-ex1",
        citation: "homothety: torus bundle eigenvalue ~ ε² while suspension spectra stay constant",
        params: &["b0", "B"],
        default_config: "eps_grid = \"dyadic:1:10\"\n[params]\nb0 = [1.0, 2.0]\nB = \"\"\"\n1 0\n0 -1\n\"\"\"\n",
        run: run_tore_ex1,
    },
    Scenario {
        name: "tore-ex2",
        citation: "partial fiber collapse: λ(ε) → Σ over uncollapsed directions of b_i²",
        params: &["b0", "alpha"],
        default_config: "eps_grid = \"dyadic:1:10\"\n[params]\nb0 = [1.0, 0.5, 0.25]\nalpha = [1, 0, 0]\n",
        run: run_tore_ex2,
    },
    Scenario {
        name: "torus-bundle",
        citation: "nilpotent Tⁿ bundles over T²: eigenvalue Vol(B)⁻²|V|² with multiplicity C(n, p−1)",
        params: &["a", "base_volume"],
        default_config: "[params]\na = [2, 4]\nbase_volume = 1.0\n",
        run: run_torus_bundle,
    },
    Scenario {
        name: "vol-bound",
        citation: "fiber collapse of a nontrivial bundle: λ/Vol(fiber)² stays bounded below",
        params: &["a", "frame", "alpha"],
        default_config: "eps_grid = \"dyadic:1:10\"\n[params]\na = [1, 1]\nframe = \"\"\"\n1 0\n0 1\n\"\"\"\nalpha = [1, 1]\n",
        run: run_vol_bound,
    },
];

pub fn find(name: &str) -> CliResult<&'static Scenario> {
    SCENARIOS
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| CliError::ScenarioUnknown(name.to_string()))
}

/// Seed of a sampling scenario.
pub(crate) fn require_seed(cfg: &ScenarioConfig) -> CliResult<u64> {
    cfg.seed.ok_or_else(|| CliError::config("seed", "this scenario samples and needs a seed"))
}

/// Maps a core error caused by a parameter to a config error on that key.
pub(crate) fn param_err(key: &'static str) -> impl Fn(collapse_spectra::Error) -> CliError {
    move |e| CliError::config(format!("params.{key}"), e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_alphabetical_and_defaults_parse() {
        let names: Vec<_> = SCENARIOS.iter().map(|s| s.name).collect();
        let mut sorted = names.clone();
        sorted.sort_unstable();
        assert_eq!(names, sorted);
        assert!(names.len() >= 10);
        for s in &SCENARIOS {
            let cfg = s.config(None).unwrap();
            cfg.params.check_keys(s.params).unwrap();
            assert!(!s.default_summary().contains('\n'));
        }
    }

    #[test]
    fn unknown_names_and_keys() {
        assert!(matches!(find("nope"), Err(CliError::ScenarioUnknown(_))));
        let s = find("heisenberg").unwrap();
        match s.config(Some("[params]\nexponent = 1")) {
            Err(CliError::ConfigInvalid { key, .. }) => assert_eq!(key, "params.exponent"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn user_values_override_defaults() {
        let s = find("heisenberg").unwrap();
        let cfg = s.config(Some("seed = 9\neps_grid = [0.25]")).unwrap();
        assert_eq!(cfg.seed, Some(9));
        assert_eq!(cfg.eps_grid, Some(vec![0.25]));
        assert!(!cfg.params.is_empty());

        let m = find("mapping-torus").unwrap();
        assert!(m.config(None).unwrap().params.contains("A"));
        let cfg = m.config(Some("[params]\nB = \"1 0\\n0 -1\"")).unwrap();
        assert!(!cfg.params.contains("A"));
    }
}
