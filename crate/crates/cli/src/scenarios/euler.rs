use collapse_spectra::euler_bound::{
    bound_chain, det_factorization, noninjective_reduce, rho_flat, vol_bound_experiment, EulerMap,
};
use collapse_spectra::flat_torus::FlatTorus;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{param_err, require_seed};
use crate::config::{dyadic_grid, ScenarioConfig};
use crate::error::{CliError, CliResult};
use crate::output::{Check, RunOutput, Table};

fn random_int_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: i64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound) as f64)
}

/// `I + NNᵀ` with small random `N`.
fn random_gram(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let noise = DMatrix::from_fn(k, k, |_, _| rng.random_range(-0.3..0.3));
    DMatrix::identity(k, k) + &noise * noise.transpose()
}

/// Product of elementary integer matrices.
fn random_unimodular(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let mut u = DMatrix::identity(k, k);
    for _ in 0..2 * k {
        let i = rng.random_range(0..k);
        let j = rng.random_range(0..k);
        if i != j {
            let c = [-2.0, -1.0, 1.0, 2.0][rng.random_range(0..4)];
            let mut e = DMatrix::identity(k, k);
            e[(i, j)] = c;
            u *= e;
        }
    }
    u
}

/// Full-rank integral `E` (`r × k`, `k ≤ r ≤ k + 2`) with a random fiber metric.
fn random_injective(rng: &mut ChaCha8Rng, k: usize, bound: i64) -> CliResult<EulerMap<f64>> {
    loop {
        let r = k + rng.random_range(0..=2);
        let e = random_int_matrix(rng, r, k, bound);
        let map = EulerMap::new(e, random_gram(rng, k))?;
        if map.rank() == k {
            return Ok(map);
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn run_euler_bound(cfg: &ScenarioConfig) -> CliResult<RunOutput> {
    let p = &cfg.params;
    let seed = require_seed(cfg)?;
    let trials = p.usize("trials", 50)?;
    let k_max = p.usize("k_max", 4)?;
    if !(1..=6).contains(&k_max) {
        return Err(CliError::config("params.k_max", "must lie in 1..=6"));
    }
    let bound = p.usize("entry_bound", 4)? as i64;
    if bound == 0 {
        return Err(CliError::config("params.entry_bound", "must be positive"));
    }
    let instances = p.usize("noninjective", 10)?;
    let rho_dims = p.i64_list("rho_dims", &[2, 3])?;
    if rho_dims.iter().any(|d| !(2..=4).contains(d)) {
        return Err(CliError::config("params.rho_dims", "dimensions must lie in 2..=4"));
    }
    let tol = cfg.tolerances.chain;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = RunOutput::default();

    let mut chains = Table::new(&[
        "trial",
        "k",
        "rows",
        "lambda_min",
        "middle",
        "det_bound",
        "margin",
        "det_defect",
    ]);
    let (mut worst_margin, mut worst_det, mut all_hold) = (f64::INFINITY, 0.0f64, true);
    for trial in 0..trials {
        let k = 1 + trial % k_max;
        let map = random_injective(&mut rng, k, bound)?;
        let chain = bound_chain(&map)?;
        let det = det_factorization(&map)?;
        all_hold &= chain.holds();
        worst_margin = worst_margin.min(chain.margin() / (1.0 + chain.lambda_min));
        worst_det = worst_det.max(det.relative_defect);
        chains.push(vec![
            trial.into(),
            k.into(),
            map.matrix().nrows().into(),
            chain.lambda_min.into(),
            chain.middle.into(),
            chain.det_bound.into(),
            chain.margin().into(),
            det.relative_defect.into(),
        ]);
    }
    out.table("chains.csv", &chains);
    if trials > 0 {
        out.check(Check::new("λ_min ≥ Det(e*e)/‖e*e‖^(k−1) ≥ (Det e)²/‖e‖^(2k−2)", all_hold, format!("{trials} maps")));
        out.check(Check::at_least("relative chain margin", worst_margin, -tol));
        out.check(Check::at_most("Det e = Det′e · Vol(Tᵏ)", worst_det, tol));
    }

    // E = [E′ | 0]·U with metric Uᵀ(G′ ⊕ G_K)U: the quotient is (E′, G′).
    let mut noninj = Table::new(&[
        "instance",
        "k",
        "kernel_dim",
        "expected_kernel_dim",
        "lambda1",
        "lambda1_oracle",
        "det_a",
        "det_a_oracle",
    ]);
    let (mut worst_quot, mut kernels_match) = (0.0f64, true);
    for inst in 0..instances {
        let k = 2 + inst % 3;
        let l = rng.random_range(1..k);
        let q = k - l;
        let oracle_map = random_injective(&mut rng, q, 3)?;
        let g_kernel = random_gram(&mut rng, l);
        let e1 = oracle_map.matrix();
        let mut e = DMatrix::zeros(e1.nrows(), k);
        e.view_mut((0, 0), (e1.nrows(), q)).copy_from(e1);
        let mut g = DMatrix::zeros(k, k);
        g.view_mut((0, 0), (q, q)).copy_from(oracle_map.gram());
        g.view_mut((q, q), (l, l)).copy_from(&g_kernel);
        let u = random_unimodular(&mut rng, k);
        let map = EulerMap::new(e * &u, u.transpose() * g * &u)?;
        let report = noninjective_reduce(&map)?;
        let oracle = bound_chain(&oracle_map)?;
        let lambda1 = report.chain.map(|c| c.lambda_min);
        let direct = report.lambda1_direct.unwrap_or(f64::NAN);
        kernels_match &= report.kernel.ncols() == l;
        let defect = [
            rel(lambda1.unwrap_or(f64::NAN), oracle.lambda_min),
            rel(direct, oracle.lambda_min),
            rel(report.det_a, oracle.det_e),
        ]
        .into_iter()
        .fold(0.0, |acc: f64, x| if x.is_nan() { f64::INFINITY } else { acc.max(x) });
        worst_quot = worst_quot.max(defect);
        noninj.push(vec![
            inst.into(),
            k.into(),
            report.kernel.ncols().into(),
            l.into(),
            lambda1.into(),
            oracle.lambda_min.into(),
            report.det_a.into(),
            oracle.det_e.into(),
        ]);
    }
    out.table("noninjective.csv", &noninj);
    if instances > 0 {
        out.check(Check::new("kernel rank of non-injective maps", kernels_match, format!("{instances} instances")));
        out.check(Check::at_most("quotient bound data against hand-built quotients", worst_quot, 1e-9));
    }

    let mut rho = Table::new(&["dim", "rho", "class"]);
    for &m in &rho_dims {
        let r = rho_flat(&FlatTorus::<f64>::identity(m as usize), None)?;
        let class = r.class.iter().map(i64::to_string).collect::<Vec<_>>().join(" ");
        rho.push(vec![m.into(), r.rho.into(), class.into()]);
        out.check(Check::at_most(format!("ρ(T^{m}, identity) = 1"), (r.rho - 1.0).abs(), 1e-12));
    }
    out.table("rho.csv", &rho);
    Ok(out)
}

pub fn run_vol_bound(cfg: &ScenarioConfig) -> CliResult<RunOutput> {
    let p = &cfg.params;
    let a = p.i64_list("a", &[1, 1])?;
    let frame = p.square_matrix("frame", "1 0\n0 1")?;
    let alpha = p.ratio_list("alpha", &[1, 1])?;
    if frame.nrows() != a.len() {
        return Err(CliError::config("params.frame", "frame must be n×n with n = len(a)"));
    }
    if alpha.len() != a.len() {
        return Err(CliError::config("params.alpha", "needs one exponent per fiber direction"));
    }
    let grid = cfg.grid_or(&dyadic_grid(1, 10));
    let report = vol_bound_experiment(&a, &frame, &alpha, &grid).map_err(param_err("a"))?;
    let mut out = RunOutput::default();
    out.raw("vol_bound.csv", report.to_csv());
    let first = report.rows.first().map_or(0.0, |r| r.ratio);
    out.check(Check::new(
        "λ/Vol² bounded below along the collapse",
        report.bounded_below,
        format!("min {:?}, first {:?}", report.min_ratio, first),
    ));
    let engine = report
        .rows
        .iter()
        .map(|r| r.engine.map_or(f64::INFINITY, |e| (e - r.lambda).abs() / (1.0 + r.lambda)))
        .fold(0.0, f64::max);
    out.check(Check::at_most("engine agrees with η(ε)²", engine, cfg.tolerances.rel_error));
    Ok(out)
}
