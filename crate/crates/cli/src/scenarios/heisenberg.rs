use collapse_spectra::lie::{heisenberg_scaled, spectrum};

use crate::config::ScenarioConfig;
use crate::error::CliResult;
use crate::output::{Check, RunOutput, Table};

pub fn run_heisenberg(cfg: &ScenarioConfig) -> CliResult<RunOutput> {
    let triples = cfg.params.f64_rows("exponents", 3, &[&[1.0, 1.0, 3.0], &[1.0, 1.0, 2.0]])?;
    let grid = cfg.grid_or(&[0.5, 0.1, 0.01]);
    let mut table = Table::new(&["alpha", "beta", "gamma", "tau", "eps", "lambda", "expected", "rel_error"]);
    let mut worst = 0.0f64;
    let mut all_unique = true;
    for t in &triples {
        let (a, b, g) = (t[0], t[1], t[2]);
        let tau = g - a - b;
        for &eps in &grid {
            let s = spectrum(&heisenberg_scaled(a, b, g, eps)?, 1)?;
            let nz = s.nonzero();
            all_unique &= nz.len() == 1;
            let expected = eps.powf(2.0 * tau);
            let lambda = nz.first().copied();
            let rel = lambda.map_or(f64::INFINITY, |l| (l - expected).abs() / expected);
            worst = worst.max(rel);
            table.push(vec![
                a.into(),
                b.into(),
                g.into(),
                tau.into(),
                eps.into(),
                lambda.into(),
                expected.into(),
                rel.into(),
            ]);
        }
    }
    let mut out = RunOutput::default();
    out.table("heisenberg.csv", &table);
    out.check(Check::new(
        "exactly one nonzero eigenvalue of Δ¹",
        all_unique,
        format!("{} metrics", table.len()),
    ));
    out.check(Check::at_most("relative error of ε^(2τ)", worst, cfg.tolerances.rel_error));
    Ok(out)
}
