use collapse_spectra::flat_torus::{
    diameter, diameter_eigenvalue_bound_check, gt_gram, lambda01, odd_multiplicity_check, p_form_spectrum,
    threshold_check_product, FlatTorus,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{param_err, require_seed};
use crate::error::{CliError, CliResult};
use crate::config::ScenarioConfig;
use crate::output::{Check, RunOutput, Table};

fn torus(cfg: &ScenarioConfig, key: &'static str, default: &str) -> CliResult<FlatTorus<f64>> {
    FlatTorus::new(cfg.params.square_matrix(key, default)?).map_err(param_err(key))
}

pub fn run_flat_threshold(cfg: &ScenarioConfig) -> CliResult<RunOutput> {
    let p = &cfg.params;
    let base = torus(cfg, "base_gram", "1")?;
    let fiber = torus(cfg, "fiber_gram", "0.25")?;
    let product = FlatTorus::product(&base, &fiber);
    let degrees = p.i64_list("degrees", &[0, 1, 2])?;
    if let Some(&bad) = degrees.iter().find(|&&d| d < 0 || d as usize > product.dim()) {
        return Err(CliError::config("params.degrees", format!("degree {bad} outside 0..={}", product.dim())));
    }
    let factor = p.f64("cutoff_factor", 1.5)?;
    if !(factor >= 1.0) {
        return Err(CliError::config("params.cutoff_factor", "must be at least 1"));
    }
    let resolution = p.usize("resolution", 200)?;
    let samples = p.usize("samples", 10)?;
    let cutoff = factor * lambda01(&fiber);
    let mut out = RunOutput::default();

    let mut thresholds = Table::new(&["p", "threshold", "violations", "first_non_invariant", "attained"]);
    for &deg in &degrees {
        let r = threshold_check_product(&base, &fiber, deg as usize, cutoff)?;
        thresholds.push(vec![
            deg.into(),
            r.threshold.into(),
            r.violations.into(),
            r.first_non_invariant.into(),
            r.attained.into(),
        ]);
        out.check(Check::new(
            format!("p = {deg}: invariant below λ₀,₁(fiber), threshold attained"),
            r.holds(),
            format!("{} violations, first non-invariant {:?}", r.violations, r.first_non_invariant),
        ));
    }
    out.table("thresholds.csv", &thresholds);
    out.raw("modes.csv", p_form_spectrum(&product, 1, cutoff)?.to_csv());

    if product.dim() <= 3 {
        let bound = diameter_eigenvalue_bound_check(&product, resolution)?;
        out.check(Check::at_least("λ₀,₁ ≥ (π/diam)² on the product", bound.margin, -bound.slack));
    }

    // odd multiplicity forces an invariant eigenfunction
    let seed = require_seed(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut odd = Table::new(&["sample", "base_1", "base_2", "fiber", "odd_groups", "violations"]);
    let mut violations = 0;
    for s in 0..samples {
        let u1 = rng.random_range(0.5..2.0);
        let u2 = rng.random_range(0.5..2.0);
        let l = rng.random_range(0.3..1.0);
        let base = FlatTorus::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![u1, u2])))?;
        let t = FlatTorus::product(&base, &FlatTorus::circle(l)?);
        let report = odd_multiplicity_check(&t, 0, 4.0 * lambda01(&t))?;
        violations += report.violations;
        odd.push(vec![
            s.into(),
            u1.into(),
            u2.into(),
            l.into(),
            report.odd_groups.into(),
            report.violations.into(),
        ]);
    }
    out.table("odd_multiplicity.csv", &odd);
    out.check(Check::equal("odd multiplicities carry an invariant mode", violations, 0));
    Ok(out)
}

/// Sorted scalar eigenvalues below `limit`.
fn values_below(t: &FlatTorus<f64>, cutoff: f64, limit: f64) -> CliResult<Vec<f64>> {
    Ok(p_form_spectrum(t, 0, cutoff)?
        .values()
        .into_iter()
        .filter(|&v| v < limit)
        .collect())
}

pub fn run_gt_family(cfg: &ScenarioConfig) -> CliResult<RunOutput> {
    let p = &cfg.params;
    let ts = p.f64_list("t", &[0.0, 0.3, 0.5, 1.25])?;
    let cutoff = p.f64("cutoff", 200.0)?;
    if !(cutoff > 0.0) {
        return Err(CliError::config("params.cutoff", "must be positive"));
    }
    let resolution = p.usize("resolution", 200)?;
    let tol = cfg.tolerances.periodicity;
    let unimodular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    let mut out = RunOutput::default();
    let mut table = Table::new(&[
        "t",
        "lambda01",
        "diameter",
        "diameter_error",
        "bound_margin",
        "gram_defect",
        "spectrum_defect",
        "diameter_gap",
    ]);
    let (mut worst_gram, mut worst_spec, mut worst_diam, mut worst_bound) =
        (0.0f64, 0.0f64, f64::INFINITY, f64::INFINITY);
    for &t in &ts {
        let g0 = gt_gram(t);
        let g1 = gt_gram(t + 1.0);
        let pulled = unimodular.transpose() * g0.gram() * &unimodular;
        let gram_defect = (pulled - g1.gram()).amax() / g1.gram().amax();
        let s0 = values_below(&g0, cutoff, 0.95 * cutoff)?;
        let s1 = values_below(&g1, cutoff, 0.95 * cutoff)?;
        let spec_defect = if s0.len() == s1.len() {
            s0.iter().zip(&s1).map(|(a, b)| (a - b).abs() / (1.0 + a)).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        let d0 = diameter(&g0, resolution)?;
        let d1 = diameter(&g1, resolution)?;
        // allowance minus gap; negative when the diameters disagree
        let diam_margin = d0.error + d1.error - (d0.value - d1.value).abs();
        let b0 = diameter_eigenvalue_bound_check(&g0, resolution)?;
        let b1 = diameter_eigenvalue_bound_check(&g1, resolution)?;
        let bound_margin = (b0.margin + b0.slack).min(b1.margin + b1.slack);
        worst_gram = worst_gram.max(gram_defect);
        worst_spec = worst_spec.max(spec_defect);
        worst_diam = worst_diam.min(diam_margin);
        worst_bound = worst_bound.min(bound_margin);
        table.push(vec![
            t.into(),
            lambda01(&g0).into(),
            d0.value.into(),
            d0.error.into(),
            b0.margin.into(),
            gram_defect.into(),
            spec_defect.into(),
            (d0.value - d1.value).abs().into(),
        ]);
    }
    out.table("gt.csv", &table);
    out.check(Check::at_most("g_(t+1) = Uᵀ g_t U", worst_gram, 1e-15));
    out.check(Check::at_most("spectra at t and t+1 agree", worst_spec, tol));
    out.check(Check::at_least("diameters at t and t+1 agree within grid error", worst_diam, 0.0));
    out.check(Check::at_least("λ₀,₁ ≥ (π/diam)² within grid slack", worst_bound, 0.0));
    Ok(out)
}
