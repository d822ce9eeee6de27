use collapse_spectra::curvature::curvature_table;
use collapse_spectra::intlat::IntegerMatrix;
use collapse_spectra::lie::{exterior_derivative, spectrum, FormBasis};
use collapse_spectra::mapping_torus::{
    collapse_family, conjugate, harmonic_vs_betti, invariants_dd, run_collapse, semisimple_floor,
    semisimplicity_defect, small_threshold, solvable_algebra, DoubleJordanFamily, MappingTorusBundle, RANK_TOL,
};
use collapse_spectra::scalar::binomial;
use nalgebra::DMatrix;

use super::{param_err, require_seed};
use crate::config::{dyadic_grid, ScenarioConfig};
use crate::error::{CliError, CliResult};
use crate::output::{Check, RunOutput, Table};

/// `λ_{k+1}` must stay above this along a `k`-collapse.
pub const EMPIRICAL_FLOOR: f64 = 1e-2;

pub fn run_mapping_torus(cfg: &ScenarioConfig) -> CliResult<RunOutput> {
    let p = &cfg.params;
    let b = p.square_matrix("B", "0 1\n0 0")?;
    let n = b.nrows();
    if b.trace().abs() > 1e-9 * (1.0 + b.amax()) {
        return Err(CliError::config("params.B", "B must be traceless"));
    }
    let (d, dp) = invariants_dd(&b, RANK_TOL).map_err(param_err("B"))?;
    let k = p.opt_usize("k")?.unwrap_or(d - dp);
    if k > d - dp {
        return Err(CliError::config("params.k", format!("k = {k} exceeds d − d′ = {}", d - dp)));
    }
    let grid = cfg.grid_or(&dyadic_grid(1, 10));
    let mut out = RunOutput::default();

    let mut summary = Table::new(&["quantity", "value"]);
    for (q, v) in [("n", n), ("d", d), ("d_prime", dp), ("k", k)] {
        summary.push(vec![q.into(), v.into()]);
    }
    if let Some(a) = p.opt_integer_matrix("A")? {
        let bundle = MappingTorusBundle::new(a, b.clone()).map_err(param_err("A"))?;
        let (kernel, b1) = harmonic_vs_betti(&bundle)?;
        summary.push(vec!["b1".into(), b1.into()]);
        out.check(Check::new(
            "invariant harmonic 1-forms ≤ b₁",
            kernel <= b1,
            format!("{kernel} ≤ {b1}"),
        ));
    }

    let table = run_collapse(&b, k, &grid, RANK_TOL)?;
    out.raw("collapse.csv", table.to_csv());
    out.check(Check::new(
        "dim ker Δ¹ = d′ + 1 on every metric",
        table.rows.iter().all(|r| r.spectrum.kernel_dim == dp + 1),
        format!("expected {}", dp + 1),
    ));
    out.check(Check::new(
        "n − d′ nonzero eigenvalues on every metric",
        table.rows.iter().all(|r| r.spectrum.nonzero().len() == n - dp),
        format!("expected {}", n - dp),
    ));
    let small_ratio = table
        .rows
        .iter()
        .flat_map(|r| r.spectrum.nonzero()[..k].iter().map(move |&v| v / (10.0 * r.eps * r.eps)))
        .fold(0.0, f64::max);
    out.check(Check::at_most("first k eigenvalues / 10ε²", small_ratio, 1.0));
    let floor = table
        .rows
        .iter()
        .filter_map(|r| r.spectrum.nonzero().get(k).copied())
        .reduce(f64::min);
    if let Some(f) = floor {
        out.check(Check::at_least("eigenvalue k+1 stays above the floor", f, EMPIRICAL_FLOOR));
    }
    let smallest = table
        .rows
        .iter()
        .min_by(|x, y| x.eps.total_cmp(&y.eps))
        .expect("grid is nonempty");
    out.check(Check::equal(
        format!("eigenvalues below {:?} at ε = {:?}", small_threshold(smallest.eps), smallest.eps),
        smallest.small_count,
        k,
    ));
    let trace1 = collapse_family(&b, k, RANK_TOL)?.c_eps(1.0).norm_squared();
    let max_trace = table.rows.iter().map(|r| r.trace).fold(0.0, f64::max);
    out.check(Check::at_most("Tr(C_εᵀC_ε) bounded by its ε = 1 value", max_trace, trace1 + 1e-9));
    if k == 0 {
        let first = &table.rows[0].spectrum;
        out.check(Check::new(
            "homothety leaves the spectrum unchanged",
            table.rows.iter().all(|r| r.spectrum == *first),
            "bitwise comparison",
        ));
    }

    let defect = semisimplicity_defect(&b);
    summary.push(vec!["semisimplicity_defect".into(), defect.into()]);
    if defect <= 1e-8 {
        let seed = require_seed(cfg)?;
        let trials = p.usize("trials", 50)?;
        let cap = p.f64("curvature_cap", 1.0)?;
        if !(cap > 0.0) {
            return Err(CliError::config("params.curvature_cap", "must be positive"));
        }
        let report = semisimple_floor(&b, trials, cap, seed)?;
        summary.push(vec!["floor".into(), report.floor.into()]);
        summary.push(vec!["floor_accepted".into(), report.accepted.into()]);
        out.check(Check::new(
            "semisimple B: eigenvalues bounded below over sampled metrics",
            report.passes,
            format!("floor {:?} over {} metrics", report.floor, report.accepted),
        ));
    }
    out.table("summary.csv", &summary);
    Ok(out)
}

/// The six nonzero entries of `d: Λ²→Λ³` for `C_ε`, frame `(V₁..V₄, Y)`.
pub fn double_jordan_d2_pattern(lambda: f64, eps: f64) -> DMatrix<f64> {
    let b2 = FormBasis::new(5, 2).expect("valid degree");
    let b3 = FormBasis::new(5, 3).expect("valid degree");
    let mut m = DMatrix::zeros(b3.len(), b2.len());
    let entries: [(&[usize], &[usize], f64); 6] = [
        (&[0, 1, 4], &[0, 1], -2.0 * lambda),
        (&[1, 2, 4], &[0, 2], -eps),
        (&[0, 3, 4], &[0, 2], -eps),
        (&[1, 3, 4], &[0, 3], -eps),
        (&[1, 3, 4], &[1, 2], -eps),
        (&[2, 3, 4], &[2, 3], 2.0 * lambda),
    ];
    for (row, col, v) in entries {
        m[(b3.rank(row).unwrap(), b2.rank(col).unwrap())] = v;
    }
    m
}

fn form_label(t: &[usize]) -> String {
    t.iter()
        .map(|&i| if i == 4 { "y".to_string() } else { format!("v{}", i + 1) })
        .collect::<Vec<_>>()
        .join("^")
}

pub fn run_double_jordan(cfg: &ScenarioConfig) -> CliResult<RunOutput> {
    let alpha = cfg.params.f64("alpha", 1.0)?;
    let grid = cfg.grid_or(&dyadic_grid(4, 10));
    let fine: Vec<f64> = grid.iter().copied().filter(|&e| e < 0.1).collect();
    if fine.len() < 2 {
        return Err(CliError::config("eps_grid", "needs at least two points below 0.1"));
    }
    let fam = DoubleJordanFamily::<f64>::new(alpha).map_err(param_err("alpha"))?;
    let mut out = RunOutput::default();
    // e^λ + e^{−λ} = 3
    out.check(Check::at_most("λ = arccosh(3/2)", (fam.lambda - 1.5f64.acosh()).abs(), 1e-14));

    let mut frame_defect = 0.0f64;
    let mut small = Table::new(&["eps", "lambda_small", "ratio", "drift", "delta1_min"]);
    let mut prev: Option<f64> = None;
    let mut worst_drift = 0.0f64;
    let mut delta1_min = f64::INFINITY;
    for &eps in &grid {
        let c = conjugate(fam.bundle.b(), &fam.vertical_frame(eps))?;
        frame_defect = frame_defect.max((&c - fam.c_eps_closed_form(eps)).amax());
        let l = solvable_algebra(&c);
        let lam = spectrum(&l, 2)?.smallest_nonzero().unwrap_or(0.0);
        let d1 = spectrum(&l, 1)?.smallest_nonzero().unwrap_or(0.0);
        delta1_min = delta1_min.min(d1);
        let ratio = lam / (eps * eps);
        let drift = if eps < 0.1 {
            let drift = prev.map(|r| ((ratio - r) / r).abs());
            prev = Some(ratio);
            drift
        } else {
            None
        };
        worst_drift = worst_drift.max(drift.unwrap_or(0.0));
        small.push(vec![eps.into(), lam.into(), ratio.into(), drift.into(), d1.into()]);
    }
    out.table("small_eigenvalue.csv", &small);
    out.check(Check::at_most("Jordan frame reproduces C_ε", frame_defect, 1e-9));
    out.check(Check::at_most(
        "relative drift of λ_small/ε² below ε = 0.1",
        worst_drift,
        cfg.tolerances.drift,
    ));
    out.check(Check::at_least("Δ¹ has no small eigenvalues", delta1_min, EMPIRICAL_FLOOR));
    let (d, dp) = invariants_dd(fam.bundle.b(), RANK_TOL)?;
    out.check(Check::equal("(d, d′)", (d, dp), (0, 0)));

    let eps0 = grid[0];
    let c0 = conjugate(fam.bundle.b(), &fam.vertical_frame(eps0))?;
    let d2 = exterior_derivative(&solvable_algebra(&c0), 2)?;
    let expected = double_jordan_d2_pattern(1.5f64.acosh(), eps0);
    let b2 = FormBasis::new(5, 2)?;
    let b3 = FormBasis::new(5, 3)?;
    let mut pattern = Table::new(&["eps", "from", "to", "computed", "expected"]);
    for i in 0..b3.len() {
        for j in 0..b2.len() {
            if expected[(i, j)] != 0.0 || d2[(i, j)].abs() > cfg.tolerances.pattern {
                pattern.push(vec![
                    eps0.into(),
                    form_label(b2.tuple(j)).into(),
                    form_label(b3.tuple(i)).into(),
                    d2[(i, j)].into(),
                    expected[(i, j)].into(),
                ]);
            }
        }
    }
    out.table("d2_pattern.csv", &pattern);
    out.check(Check::at_most(
        "d: Λ² → Λ³ matches the six-entry pattern",
        (d2 - expected).amax(),
        cfg.tolerances.pattern,
    ));
    Ok(out)
}

pub fn run_rotation(_cfg: &ScenarioConfig) -> CliResult<RunOutput> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let b = DMatrix::from_row_slice(2, 2, &[0.0, two_pi, -two_pi, 0.0]);
    let bundle = MappingTorusBundle::new(IntegerMatrix::identity(2), b)?;
    let (kernel, b1) = harmonic_vs_betti(&bundle)?;
    let alg = bundle.algebra();
    let mut out = RunOutput::default();
    let mut degrees = Table::new(&["p", "invariant_harmonic", "betti", "nonzero", "smallest_nonzero"]);
    let mut kernels = Vec::new();
    for p in 0..=3 {
        let s = spectrum(&alg, p)?;
        kernels.push(s.kernel_dim);
        degrees.push(vec![
            p.into(),
            s.kernel_dim.into(),
            binomial(3, p as i64).into(),
            s.nonzero().len().into(),
            s.smallest_nonzero().into(),
        ]);
    }
    out.table("degrees.csv", &degrees);
    out.check(Check::equal("b₁ of the mapping torus", b1, 3));
    out.check(Check::equal("invariant harmonic 1-forms", kernel, 1));
    out.check(Check::equal("invariant harmonic forms by degree", kernels, vec![1, 1, 1, 1]));
    out.check(Check::at_most("metric is flat", curvature_table(&alg).max_abs(), 1e-12));
    Ok(out)
}
