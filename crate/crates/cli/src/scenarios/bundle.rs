use collapse_spectra::curvature::curvature_table;
use collapse_spectra::intlat::IntegerMatrix;
use collapse_spectra::lie::spectrum;
use collapse_spectra::mapping_torus::{run_collapse, RANK_TOL};
use collapse_spectra::scalar::binomial;
use collapse_spectra::torus_bundle::{
    collapse_direction, curvature_bound_check, eigenspace_split_check, nil_algebra, verify_spectrum,
    vertical_norm, LimitClass, TorusBundleOverT2,
};
use num_rational::Ratio;

use super::param_err;
use crate::config::{dyadic_grid, ScenarioConfig};
use crate::error::{CliError, CliResult};
use crate::output::{Check, RunOutput, Table};

pub fn run_torus_bundle(cfg: &ScenarioConfig) -> CliResult<RunOutput> {
    let p = &cfg.params;
    let a = p.i64_list("a", &[2, 4])?;
    let vol = p.f64("base_volume", 1.0)?;
    let bundle = TorusBundleOverT2::from_obstruction(&a, vol).map_err(|e| match e {
        collapse_spectra::Error::InvalidInput(m) => CliError::config("params.base_volume", m),
        other => CliError::config("params.a", other.to_string()),
    })?;
    let n = a.len();
    let tol = cfg.tolerances.rel_error;
    let mut out = RunOutput::default();

    // P e₁ · d = a with P unimodular
    let red = bundle.reduction();
    let col = red.p.column(0);
    let scaled: Vec<_> = col.iter().map(|x| x * &red.d).collect();
    let wanted: Vec<_> = bundle.obstruction().to_vec();
    out.check(Check::new(
        "reduction to a 3-dimensional nilmanifold",
        (scaled == wanted || scaled.iter().map(|x| -x).collect::<Vec<_>>() == wanted)
            && unimodular(&red.p),
        red.to_string(),
    ));

    // [Y₁, Y₂] = Σ aᵢVᵢ / Vol(B) for an orthonormal horizontal frame
    let b: Vec<f64> = a.iter().map(|&x| x as f64 / vol).collect();
    let eta = vertical_norm(&b);
    let a_norm = vertical_norm(&a.iter().map(|&x| x as f64).collect::<Vec<_>>());
    let eig = bundle.eigenvalue(a_norm);
    out.check(Check::at_most(
        "η² = Vol(B)⁻²|V|²",
        (eta * eta - eig).abs() / eig,
        tol,
    ));

    let mut spectra = Table::new(&[
        "p",
        "dim",
        "kernel",
        "multiplicity",
        "eigenvalue",
        "max_abs_error",
        "closed",
        "coclosed",
        "expected_closed",
        "expected_coclosed",
    ]);
    let mut worst = 0.0f64;
    let mut splits_hold = true;
    let alg = nil_algebra(&b);
    for deg in 1..=n + 1 {
        let err = verify_spectrum(deg, &b)?;
        worst = worst.max(err / (1.0 + eta * eta));
        let split = eigenspace_split_check(deg, &b)?;
        splits_hold &= split.holds();
        let s = spectrum(&alg, deg)?;
        spectra.push(vec![
            deg.into(),
            s.dim().into(),
            s.kernel_dim.into(),
            binomial(n as i64, deg as i64 - 1).into(),
            (eta * eta).into(),
            err.into(),
            split.computed.closed.into(),
            split.computed.coclosed.into(),
            split.expected_closed.into(),
            split.expected_coclosed.into(),
        ]);
    }
    out.table("spectra.csv", &spectra);
    out.check(Check::at_most("spectrum = {0, η² × C(n, p−1)}, p = 1..n+1", worst, tol));
    out.check(Check::new(
        "closed/coclosed split C(n−1, p−2)/C(n−1, p−1)",
        splits_hold,
        format!("n = {n}"),
    ));

    let curv = curvature_bound_check(&b)?;
    out.raw("curvature.csv", curvature_table(&alg).to_csv());
    out.check(Check::new(
        "max |K| = ¾η², attained on (Y₁, Y₂)",
        curv.holds,
        format!("max {:?}, bound {:?}, K(Y₁,Y₂) {:?}", curv.max_abs, curv.bound, curv.k_y1y2),
    ));
    out.check(Check::at_most("O'Neill defect", curv.oneill, 1e-10));
    Ok(out)
}

pub fn run_tore_ex1(cfg: &ScenarioConfig) -> CliResult<RunOutput> {
    let p = &cfg.params;
    let b0 = p.f64_list("b0", &[1.0, 2.0])?;
    if b0.is_empty() || b0.iter().all(|&x| x == 0.0) {
        return Err(CliError::config("params.b0", "needs a nonzero entry"));
    }
    let b = p.square_matrix("B", "1 0\n0 -1")?;
    if b.trace().abs() > 1e-9 * (1.0 + b.amax()) {
        return Err(CliError::config("params.B", "B must be traceless"));
    }
    let grid = cfg.grid_or(&dyadic_grid(1, 10));
    let tol = cfg.tolerances.rel_error;
    let alpha = vec![Ratio::from_integer(1); b0.len()];
    let traj = collapse_direction(&b0, &alpha, &grid).map_err(param_err("b0"))?;
    let mut out = RunOutput::default();
    out.raw("trajectory.csv", traj.to_csv());
    let eta2 = b0.iter().map(|x| x * x).sum::<f64>();
    let scaling = traj
        .points
        .iter()
        .map(|pt| (pt.lambda / (pt.eps * pt.eps) - eta2).abs() / eta2)
        .fold(0.0, f64::max);
    out.check(Check::equal("bundle eigenvalue vanishes in the limit", traj.limit, LimitClass::Vanishes));
    out.check(Check::at_most("λ(ε)/ε² = |b₀|²", scaling, tol));
    out.check(Check::at_most(
        "engine agrees with |b(ε)|²",
        traj.engine_defect() / (1.0 + eta2),
        tol,
    ));

    let table = run_collapse(&b, 0, &grid, RANK_TOL).map_err(param_err("B"))?;
    out.raw("homothety.csv", table.to_csv());
    let first = &table.rows[0].spectrum;
    out.check(Check::new(
        "suspension spectrum constant under homothety",
        table.rows.iter().all(|r| r.spectrum == *first),
        "bitwise comparison",
    ));
    Ok(out)
}

pub fn run_tore_ex2(cfg: &ScenarioConfig) -> CliResult<RunOutput> {
    let p = &cfg.params;
    let b0 = p.f64_list("b0", &[1.0, 0.5, 0.25])?;
    let alpha = p.ratio_list("alpha", &[1, 0, 0])?;
    if alpha.len() != b0.len() {
        return Err(CliError::config("params.alpha", "needs one exponent per entry of b0"));
    }
    let grid = cfg.grid_or(&dyadic_grid(1, 10));
    let tol = cfg.tolerances.rel_error;
    let traj = collapse_direction(&b0, &alpha, &grid).map_err(param_err("alpha"))?;
    let mut out = RunOutput::default();
    out.raw("trajectory.csv", traj.to_csv());

    let zero = Ratio::from_integer(0);
    let kept = b0
        .iter()
        .zip(&alpha)
        .filter(|(_, a)| **a == zero)
        .fold(0.0, |acc, (&b, _)| acc + b * b);
    let limit = match traj.limit {
        LimitClass::Vanishes => 0.0,
        LimitClass::Positive(v) => v,
    };
    out.check(Check::new(
        "limit = Σ of b_i² over uncollapsed directions",
        limit == kept,
        format!("limit {limit:?}, expected {kept:?} ({})", traj.limit),
    ));
    let min_alpha = alpha
        .iter()
        .filter(|a| **a > zero)
        .map(|a| *a.numer() as f64 / *a.denom() as f64)
        .reduce(f64::min);
    let collapsed = b0
        .iter()
        .zip(&alpha)
        .filter(|(_, a)| **a > zero)
        .fold(0.0, |acc, (&b, _)| acc + b * b);
    let last = traj
        .points
        .iter()
        .min_by(|x, y| x.eps.total_cmp(&y.eps))
        .expect("grid is nonempty");
    let envelope = min_alpha.map_or(0.0, |m| collapsed * last.eps.powf(2.0 * m));
    out.check(Check::at_most(
        "|λ(ε) − limit| within the ε^(2 min α) envelope",
        (last.lambda - limit).abs(),
        envelope * (1.0 + 1e-12) + 1e-15,
    ));
    out.check(Check::at_most(
        "engine agrees with |b(ε)|²",
        traj.engine_defect() / (1.0 + b0.iter().map(|x| x * x).sum::<f64>()),
        tol,
    ));
    Ok(out)
}

fn unimodular(m: &IntegerMatrix) -> bool {
    let d = m.determinant();
    d == 1.into() || d == (-1).into()
}
