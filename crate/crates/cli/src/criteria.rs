//! The acceptance criteria run by `verify-all`. Criterion 12 (wall time and
//! byte-determinism of the whole run) is evaluated by the caller.

use std::time::{Duration, Instant};

use collapse_spectra::flat_torus::{
    diameter_eigenvalue_bound_check, gt_gram, threshold_check_product, FlatTorus,
};
use collapse_spectra::intlat::{betti1_mapping_torus, rational_rank, IntegerMatrix};
use collapse_spectra::lie::{
    change_frame, d_squared_defect, direct_sum, exterior_derivative, heisenberg, heisenberg_scaled, laplacian,
    spectrum, unimodularity_defect, StructureConstants,
};
use collapse_spectra::mapping_torus::{
    collapse_family, invariants_dd, run_collapse, solvable_algebra, DoubleJordanFamily, RandomFrame, RANK_TOL,
};
use collapse_spectra::scalar::binomial;
use collapse_spectra::torus_bundle::{curvature_bound_check, eigenspace_split_check, nil_algebra, verify_spectrum};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{dyadic_grid, ScenarioConfig, Tolerances};
use crate::error::CliResult;
use crate::output::{Cell, Check, RunOutput, Table};
use crate::scenarios::{self, Scenario};

/// Seed and tolerances shared by all criteria.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Context {
    pub seed: u64,
    pub tol: Tolerances,
}

impl Context {
    /// Independent stream per criterion.
    fn rng(&self, id: u8) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id as u64);
        rng
    }

    /// Default config of a scenario with this context's seed and tolerances.
    fn scenario(&self, s: &Scenario, id: u8) -> CliResult<RunOutput> {
        let mut cfg: ScenarioConfig = s.config(None)?;
        if cfg.seed.is_some() {
            cfg.seed = Some(self.seed.wrapping_add(id as u64));
        }
        cfg.tolerances = self.tol;
        (s.run)(&cfg)
    }
}

pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub run: fn(&Context) -> CliResult<RunOutput>,
}

pub static CRITERIA: [Criterion; 11] = [
    Criterion { id: 1, title: "Heisenberg eigenvalue ε^(2τ)", run: c01_heisenberg },
    Criterion { id: 2, title: "closed form diag(C·Cᵀ, 0) of Δ¹", run: c02_closed_form },
    Criterion { id: 3, title: "d∘d = 0, Δ symmetric PSD, Poincaré duality", run: c03_complex },
    Criterion { id: 4, title: "dim ker Δ¹ = d′+1 over random frames", run: c04_kernel },
    Criterion { id: 5, title: "k-collapse produces exactly k small eigenvalues", run: c05_collapse },
    Criterion { id: 6, title: "b₁ = 1 + dim ker(A − I)", run: c06_betti },
    Criterion { id: 7, title: "double Jordan block regression", run: c07_double_jordan },
    Criterion { id: 8, title: "nilpotent bundle spectrum, split and curvature", run: c08_bundle },
    Criterion { id: 9, title: "contrasting collapses", run: c09_contrast },
    Criterion { id: 10, title: "flat thresholds, g_t periodicity, (π/diam)² bound", run: c10_flat },
    Criterion { id: 11, title: "Euler bound chain, quotients and ρ", run: c11_euler },
];

pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub output: RunOutput,
    pub elapsed: Duration,
}

pub fn run_all(ctx: &Context) -> CliResult<Vec<CriterionResult>> {
    CRITERIA
        .iter()
        .map(|c| {
            let start = Instant::now();
            let output = (c.run)(ctx)?;
            Ok(CriterionResult {
                id: c.id,
                title: c.title,
                output,
                elapsed: start.elapsed(),
            })
        })
        .collect()
}

fn c01_heisenberg(ctx: &Context) -> CliResult<RunOutput> {
    let start = Instant::now();
    let mut out = ctx.scenario(scenarios::find("heisenberg")?, 1)?;
    let elapsed = start.elapsed();
    out.check(Check::new("runtime under 1 s", elapsed < Duration::from_secs(1), "wall clock"));
    Ok(out)
}

fn c02_closed_form(ctx: &Context) -> CliResult<RunOutput> {
    let mut rng = ctx.rng(2);
    let mut table = Table::new(&["case", "n", "defect"]);
    let mut worst = 0.0f64;
    for case in 0..20usize {
        let n = 1 + case % 5;
        let c = DMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
        let mut expected = DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                expected[(i, j)] = (0..n).map(|m| c[(i, m)] * c[(j, m)]).sum::<f64>();
            }
        }
        let defect = (laplacian(&solvable_algebra(&c), 1)? - expected).amax();
        worst = worst.max(defect);
        table.push(vec![case.into(), n.into(), defect.into()]);
    }
    let mut out = RunOutput::default();
    out.table("closed_form.csv", &table);
    out.check(Check::at_most("engine Δ¹ − diag(C·Cᵀ, 0)", worst, ctx.tol.closed_form));
    Ok(out)
}

fn nilpotent(sizes: &[usize]) -> DMatrix<f64> {
    let n: usize = sizes.iter().sum();
    let mut b = DMatrix::zeros(n, n);
    let mut off = 0;
    for &s in sizes {
        for i in 0..s.saturating_sub(1) {
            b[(off + i, off + i + 1)] = 1.0;
        }
        off += s;
    }
    b
}

fn test_algebras(rng: &mut ChaCha8Rng) -> CliResult<Vec<(String, StructureConstants<f64>)>> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let dj = DoubleJordanFamily::<f64>::new(1.0)?;
    let mut list: Vec<(String, StructureConstants<f64>)> = vec![
        ("heisenberg".into(), heisenberg()),
        ("heisenberg_scaled".into(), heisenberg_scaled(1.0, 1.0, 3.0, 0.1)?),
        ("jordan_2".into(), solvable_algebra(&nilpotent(&[2]))),
        ("jordan_3".into(), solvable_algebra(&nilpotent(&[3]))),
        ("jordan_2_2".into(), solvable_algebra(&nilpotent(&[2, 2]))),
        ("hyperbolic".into(), solvable_algebra(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]))),
        ("rotation".into(), solvable_algebra(&DMatrix::from_row_slice(2, 2, &[0.0, two_pi, -two_pi, 0.0]))),
        ("double_jordan".into(), solvable_algebra(&dj.c_eps_closed_form(0.1))),
        ("non_unimodular".into(), solvable_algebra(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]))),
        ("nil_1".into(), nil_algebra(&[1.5])),
        ("nil_2".into(), nil_algebra(&[1.0, -0.5])),
        ("nil_3".into(), nil_algebra(&[0.3, 1.0, 2.0])),
        (
            "heisenberg+hyperbolic".into(),
            direct_sum(&heisenberg(), &solvable_algebra(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]))),
        ),
    ];
    for i in 0..5 {
        let n = 2 + i % 3;
        let c = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.5..1.5));
        let c = &c - DMatrix::identity(n, n) * (c.trace() / n as f64);
        list.push((format!("traceless_{i}"), solvable_algebra(&c)));
    }
    let framed: Vec<_> = list
        .iter()
        .take(8)
        .map(|(name, l)| {
            let n = l.dim();
            let p = DMatrix::identity(n, n) * 2.0 + DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.5..0.5));
            change_frame(l, &p).map(|m| (format!("{name}_frame"), m))
        })
        .collect::<Result<_, _>>()?;
    list.extend(framed);
    Ok(list)
}

fn c03_complex(ctx: &Context) -> CliResult<RunOutput> {
    let mut rng = ctx.rng(3);
    let mut table = Table::new(&["algebra", "dim", "unimodular", "d_squared", "asymmetry", "min_eigenvalue", "duality"]);
    let (mut worst_d2, mut worst_sym, mut worst_neg, mut worst_dual) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut checked = 0;
    for (name, l) in test_algebras(&mut rng)? {
        if unimodularity_defect(&l) > 1e-12 {
            table.push(vec![name.into(), l.dim().into(), false.into(), Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]);
            continue;
        }
        checked += 1;
        let n = l.dim();
        let mut d2 = 0.0f64;
        let mut asym = 0.0f64;
        let mut neg = 0.0f64;
        let mut dual = 0.0f64;
        for p in 0..=n {
            d2 = d2.max(d_squared_defect(&l, p)?);
            // dδ + δd assembled from d alone
            let dim = binomial(n as i64, p as i64);
            let mut lap = DMatrix::zeros(dim, dim);
            if p < n {
                let d = exterior_derivative(&l, p)?;
                lap += d.transpose() * d;
            }
            if p > 0 {
                let d = exterior_derivative(&l, p - 1)?;
                lap += &d * d.transpose();
            }
            asym = asym.max((&lap - lap.transpose()).amax());
            let scale = 1.0 + lap.amax();
            let min = lap.clone().symmetric_eigenvalues().min();
            neg = neg.max((-min / scale).max(0.0));
            let a = spectrum(&l, p)?;
            let b = spectrum(&l, n - p)?;
            let top = a.eigenvalues.last().copied().unwrap_or(0.0);
            dual = dual.max(a.max_abs_diff(&b).unwrap_or(f64::INFINITY) / (1.0 + top));
        }
        worst_d2 = worst_d2.max(d2);
        worst_sym = worst_sym.max(asym);
        worst_neg = worst_neg.max(neg);
        worst_dual = worst_dual.max(dual);
        table.push(vec![name.into(), n.into(), true.into(), d2.into(), asym.into(), neg.into(), dual.into()]);
    }
    let mut out = RunOutput::default();
    out.table("complex.csv", &table);
    out.check(Check::at_least("unimodular algebras checked", checked as f64, 10.0));
    out.check(Check::at_most("max |d∘d|", worst_d2, ctx.tol.d_squared));
    out.check(Check::at_most("max |Δ − Δᵀ|", worst_sym, ctx.tol.d_squared));
    out.check(Check::at_most("most negative eigenvalue of Δ (relative)", worst_neg, ctx.tol.d_squared));
    out.check(Check::at_most("spectrum(p) − spectrum(n−p)", worst_dual, ctx.tol.duality));
    Ok(out)
}

fn c04_kernel(ctx: &Context) -> CliResult<RunOutput> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let cases: [(&str, DMatrix<f64>); 5] = [
        ("jordan_2", nilpotent(&[2])),
        ("jordan_3", nilpotent(&[3])),
        ("jordan_2_1", nilpotent(&[2, 1])),
        ("hyperbolic", DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])),
        ("rotation", DMatrix::from_row_slice(2, 2, &[0.0, two_pi, -two_pi, 0.0])),
    ];
    let mut rng = ctx.rng(4);
    let mut table = Table::new(&["matrix", "n", "d_prime", "frames", "kernel_ok", "nonzero_ok"]);
    let mut all = true;
    for (name, b) in &cases {
        let n = b.nrows();
        let (_, dp) = invariants_dd(b, RANK_TOL)?;
        let (mut kernel_ok, mut nonzero_ok) = (0usize, 0usize);
        for _ in 0..50 {
            let frame = RandomFrame::<f64>::sample(n, &mut rng).matrix(0.5);
            let mut p = DMatrix::identity(n + 1, n + 1);
            p.view_mut((0, 0), (n, n)).copy_from(&frame);
            let s = spectrum(&change_frame(&solvable_algebra(b), &p)?, 1)?;
            kernel_ok += usize::from(s.kernel_dim == dp + 1);
            nonzero_ok += usize::from(s.nonzero().len() == n - dp);
        }
        all &= kernel_ok == 50 && nonzero_ok == 50;
        table.push(vec![(*name).into(), n.into(), dp.into(), 50usize.into(), kernel_ok.into(), nonzero_ok.into()]);
    }
    let mut out = RunOutput::default();
    out.table("kernel.csv", &table);
    out.check(Check::new("kernel d′+1 and n−d′ nonzero on 250 metrics", all, "5 matrices × 50 frames"));
    Ok(out)
}

fn c05_collapse(_ctx: &Context) -> CliResult<RunOutput> {
    let grid = dyadic_grid(1, 10);
    let mut out = RunOutput::default();
    let mut summary = Table::new(&["blocks", "k", "max_small_ratio", "min_floor", "last_small_count", "max_trace_excess", "monotone"]);
    let mut all = true;
    for sizes in [vec![2], vec![3], vec![2, 2]] {
        let b = nilpotent(&sizes);
        let label = sizes.iter().map(usize::to_string).collect::<Vec<_>>().join("_");
        let (d, dp) = invariants_dd(&b, RANK_TOL)?;
        for k in 0..=(d - dp) {
            let trace1 = collapse_family(&b, k, RANK_TOL)?.c_eps(1.0).norm_squared();
            let table = run_collapse(&b, k, &grid, RANK_TOL)?;
            out.raw(&format!("collapse_J{label}_k{k}.csv"), table.to_csv());
            let mut ratio = 0.0f64;
            let mut floor = f64::INFINITY;
            let mut excess = f64::NEG_INFINITY;
            let mut monotone = true;
            let mut prev: Option<Vec<f64>> = None;
            for row in &table.rows {
                let nz = row.spectrum.nonzero();
                for &v in &nz[..k] {
                    ratio = ratio.max(v / (10.0 * row.eps * row.eps));
                }
                if let Some(&v) = nz.get(k) {
                    floor = floor.min(v);
                }
                if let Some(p) = &prev {
                    monotone &= nz[..k].iter().zip(p).all(|(a, b)| a < b);
                }
                prev = Some(nz[..k].to_vec());
                excess = excess.max(row.trace - trace1);
            }
            let last = table.rows.last().expect("grid is nonempty").small_count;
            let constant = k > 0 || table.rows.iter().all(|r| r.spectrum == table.rows[0].spectrum);
            let ok = ratio < 1.0 && floor >= 1e-2 && last == k && excess <= 1e-9 && monotone && constant;
            all &= ok;
            summary.push(vec![
                label.clone().into(),
                k.into(),
                ratio.into(),
                if floor.is_finite() { floor.into() } else { Cell::Empty },
                last.into(),
                excess.into(),
                (monotone && constant).into(),
            ]);
            out.check(Check::new(
                format!("blocks {label}, k = {k}"),
                ok,
                format!("small/10ε² {ratio:?}, floor {floor:?}, count {last}, trace excess {excess:?}"),
            ));
        }
    }
    out.table("collapse_summary.csv", &summary);
    out.check(Check::new("all block structures", all, "J2, J3, J2⊕J2"));
    Ok(out)
}

fn c06_betti(ctx: &Context) -> CliResult<RunOutput> {
    let mut table = Table::new(&["case", "n", "b1", "expected"]);
    let mut out = RunOutput::default();
    for (name, a, want) in [
        ("identity", IntegerMatrix::identity(2), 3usize),
        ("shear", IntegerMatrix::from_rows(&[[1, 1], [0, 1]]), 2),
        ("cat_map", IntegerMatrix::from_rows(&[[2, 1], [1, 1]]), 1),
    ] {
        let b1 = betti1_mapping_torus(&a)?.b1;
        table.push(vec![name.into(), 2usize.into(), b1.into(), want.into()]);
        out.check(Check::equal(format!("b₁ for {name}"), b1, want));
    }
    let mut rng = ctx.rng(6);
    let mut agree = true;
    for case in 0..30 {
        let n = 2 + case % 3;
        let mut a = IntegerMatrix::identity(n);
        for _ in 0..rng.random_range(1..8) {
            let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
            if i == j {
                continue;
            }
            let c: i64 = rng.random_range(-2..=2);
            let e = IntegerMatrix::from_fn(n, n, |r, s| {
                if r == s {
                    1.into()
                } else if (r, s) == (i, j) {
                    c.into()
                } else {
                    0.into()
                }
            });
            a = a.mul(&e);
        }
        let b1 = betti1_mapping_torus(&a)?.b1;
        let oracle = 1 + n - rational_rank(&a.sub(&IntegerMatrix::identity(n)));
        agree &= b1 == oracle;
        table.push(vec![format!("random_{case}").into(), n.into(), b1.into(), oracle.into()]);
    }
    out.table("betti.csv", &table);
    out.check(Check::new("Smith form agrees with rational rank on 30 products", agree, "n ≤ 4"));
    Ok(out)
}

fn c07_double_jordan(ctx: &Context) -> CliResult<RunOutput> {
    ctx.scenario(scenarios::find("ex-2-6-1")?, 7)
}

fn c08_bundle(ctx: &Context) -> CliResult<RunOutput> {
    let mut rng = ctx.rng(8);
    let mut table = Table::new(&["n", "eta_sq", "p", "spectrum_error", "split_ok", "curvature_ok", "oneill"]);
    let (mut worst, mut splits, mut curv, mut oneill) = (0.0f64, true, true, 0.0f64);
    for n in 1..=3usize {
        for trial in 0..3 {
            let b: Vec<f64> = if trial == 0 {
                (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect()
            } else {
                (0..n).map(|_| rng.random_range(0.2..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect()
            };
            let eta2: f64 = b.iter().map(|x| x * x).sum();
            let c = curvature_bound_check(&b)?;
            curv &= c.holds;
            oneill = oneill.max(c.oneill);
            for p in 1..=n + 1 {
                let err = verify_spectrum(p, &b)? / (1.0 + eta2);
                let split = eigenspace_split_check(p, &b)?.holds();
                worst = worst.max(err);
                splits &= split;
                table.push(vec![n.into(), eta2.into(), p.into(), err.into(), split.into(), c.holds.into(), c.oneill.into()]);
            }
        }
    }
    let mut out = RunOutput::default();
    out.table("bundle.csv", &table);
    out.check(Check::at_most("spectrum = {0, η² × C(n, p−1)}", worst, ctx.tol.rel_error));
    out.check(Check::new("closed/coclosed split", splits, "n = 1, 2, 3"));
    out.check(Check::new("max |K| = ¾η²", curv, "attained on (Y₁, Y₂)"));
    out.check(Check::at_most("O'Neill defect", oneill, 1e-10));
    Ok(out)
}

fn c09_contrast(ctx: &Context) -> CliResult<RunOutput> {
    let mut out = RunOutput::default();
    out.absorb("tore_ex1", ctx.scenario(scenarios::find("tore-ex1")?, 9)?);
    out.absorb("tore_ex2", ctx.scenario(scenarios::find("tore-ex2")?, 9)?);
    Ok(out)
}

fn c10_flat(ctx: &Context) -> CliResult<RunOutput> {
    let mut out = RunOutput::default();
    out.absorb("flat_threshold", ctx.scenario(scenarios::find("flat-threshold")?, 10)?);
    out.absorb("gt_family", ctx.scenario(scenarios::find("gt-family")?, 10)?);

    let gram = |v: &[f64]| FlatTorus::new(DMatrix::from_row_slice(2, 2, v));
    let products: Vec<(&str, FlatTorus<f64>, FlatTorus<f64>)> = vec![
        ("circle×circle", FlatTorus::circle(1.0)?, FlatTorus::circle(0.3)?),
        ("g_0.3×circle", gt_gram(0.3), FlatTorus::circle(0.2)?),
        ("circle×T²", FlatTorus::circle(2.0)?, gram(&[0.25, 0.0, 0.0, 0.25])?),
        ("circle×skew T²", FlatTorus::circle(1.0)?, gram(&[0.2, 0.05, 0.05, 0.1])?),
    ];
    let mut table = Table::new(&["model", "p", "threshold", "violations", "attained"]);
    let mut all = true;
    for (name, base, fiber) in &products {
        let cutoff = 1.5 * collapse_spectra::flat_torus::lambda01(fiber);
        for p in 0..=base.dim() + fiber.dim() {
            let r = threshold_check_product(base, fiber, p, cutoff)?;
            all &= r.holds();
            table.push(vec![(*name).into(), p.into(), r.threshold.into(), r.violations.into(), r.attained.into()]);
        }
    }
    out.table("products.csv", &table);
    out.check(Check::new("threshold on product models", all, format!("{} models", products.len())));

    let grams: Vec<(&str, FlatTorus<f64>, usize)> = vec![
        ("identity_2", FlatTorus::identity(2), 200),
        ("g_0.3", gt_gram(0.3), 200),
        ("g_1.3", gt_gram(1.3), 200),
        ("diag_1_4", gram(&[1.0, 0.0, 0.0, 4.0])?, 200),
        ("skew", gram(&[2.0, 0.5, 0.5, 1.0])?, 200),
        ("circle_3", FlatTorus::circle(3.0)?, 200),
        ("identity_3", FlatTorus::identity(3), 24),
    ];
    let mut bounds = Table::new(&["gram", "lambda01", "diameter", "margin", "slack"]);
    let mut worst = f64::INFINITY;
    for (name, t, res) in &grams {
        let r = diameter_eigenvalue_bound_check(t, *res)?;
        worst = worst.min(r.margin + r.slack);
        bounds.push(vec![(*name).into(), r.lambda01.into(), r.diameter.value.into(), r.margin.into(), r.slack.into()]);
    }
    out.table("diameter_bound.csv", &bounds);
    out.check(Check::at_least("λ₀,₁ ≥ (π/diam)² on all test grams", worst, 0.0));
    Ok(out)
}

fn c11_euler(ctx: &Context) -> CliResult<RunOutput> {
    ctx.scenario(scenarios::find("euler-bound")?, 11)
}

