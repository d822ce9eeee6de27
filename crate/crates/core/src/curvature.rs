//! Sectional curvature of left-invariant metrics.
//!
//! The general evaluator works from the brackets alone: in an orthonormal
//! frame `ad*_U` is the transpose of `ad_U`, and
//!
//! ```text
//! K(U,V) = ¼‖ad*_U V + ad*_V U‖² − ⟨ad*_U U, ad*_V V⟩ − ¾‖[U,V]‖²
//!          − ½⟨[[U,V],V],U⟩ − ½⟨[[V,U],U],V⟩
//! ```
//!
//! Closed forms for the solvable (`ℝⁿ ⋊ ℝ`) and two-step nilpotent bundle
//! families are provided for cross-checking.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::lie::{exterior_derivative, StructureConstants};
use crate::scalar::{lit, to_f64, Real};

/// Orthonormality tolerance for curvature arguments.
pub const ORTHO_TOL: f64 = 1e-9;
/// Default number of random 2-planes in [`sampled_max_abs`].
pub const DEFAULT_PLANE_SAMPLES: usize = 200;

/// `ad*_u`, the metric adjoint of `ad_u` in the orthonormal frame.
pub fn ad_star<T: Real>(l: &StructureConstants<T>, u: &DVector<T>) -> DMatrix<T> {
    l.ad(u).transpose()
}

fn basis<T: Real>(n: usize, i: usize) -> DVector<T> {
    let mut v = DVector::zeros(n);
    v[i] = T::one();
    v
}

/// Sectional curvature of the plane spanned by orthonormal `u`, `v`.
pub fn sectional_curvature<T: Real>(
    l: &StructureConstants<T>,
    u: &DVector<T>,
    v: &DVector<T>,
) -> Result<T> {
    let n = l.dim();
    if u.len() != n || v.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "plane vectors must have length {n}"
        )));
    }
    let tol = lit::<T>(ORTHO_TOL);
    let defect = (u.norm() - T::one())
        .abs()
        .max((v.norm() - T::one()).abs())
        .max(u.dot(v).abs());
    if defect > tol {
        return Err(Error::NotOrthonormal {
            defect: to_f64(defect),
        });
    }
    Ok(curvature_unchecked(l, u, v))
}

fn curvature_unchecked<T: Real>(l: &StructureConstants<T>, u: &DVector<T>, v: &DVector<T>) -> T {
    let ads_u = ad_star(l, u);
    let ads_v = ad_star(l, v);
    let sym = &ads_u * v + &ads_v * u;
    let uv = l.bracket(u, v);
    let vu = -&uv;
    let quarter = lit::<T>(0.25);
    let half = lit::<T>(0.5);
    let three_q = lit::<T>(0.75);
    quarter * sym.norm_squared() - (&ads_u * u).dot(&(&ads_v * v)) - three_q * uv.norm_squared()
        - half * l.bracket(&uv, v).dot(u)
        - half * l.bracket(&vu, u).dot(v)
}

/// Curvatures of all frame planes `{e_i, e_j}`, `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureTable<T> {
    n: usize,
    values: Vec<T>,
    /// Largest `|K|` over randomly sampled orthonormal 2-planes, when computed.
    pub sampled_max: Option<T>,
}

impl<T: Real> CurvatureTable<T> {
    fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                values.push(f(i, j));
            }
        }
        Self {
            n,
            values,
            sampled_max: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `K(e_i, e_j)`; symmetric in the pair. Panics when `i == j`.
    pub fn get(&self, i: usize, j: usize) -> T {
        assert!(i != j && i < self.n && j < self.n, "invalid frame pair");
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        // offset of row a in the packed upper triangle
        let row = a * (2 * self.n - a - 1) / 2;
        self.values[row + (b - a - 1)]
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        let n = self.n;
        (0..n)
            .flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
            .zip(self.values.iter())
            .map(|((i, j), &k)| (i, j, k))
    }

    /// Largest `|K|` over frame pairs.
    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    /// The bound `a` used in checks: frame maximum, raised by the sampled maximum if present.
    pub fn bound(&self) -> T {
        let m = self.max_abs();
        self.sampled_max.map_or(m, |s| m.max(s))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.n, other.n);
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    /// CSV with header `pair_i,pair_j,K`; indices are 1-based.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("pair_i,pair_j,K\n");
        for (i, j, k) in self.pairs() {
            writeln!(s, "{},{},{:?}", i + 1, j + 1, to_f64(k)).unwrap();
        }
        s
    }
}

/// Frame-pair curvatures via the general formula.
pub fn curvature_table<T: Real>(l: &StructureConstants<T>) -> CurvatureTable<T> {
    let n = l.dim();
    CurvatureTable::from_fn(n, |i, j| curvature_unchecked(l, &basis(n, i), &basis(n, j)))
}

/// Largest `|K|` over `samples` random orthonormal 2-planes (Gaussian pairs,
/// Gram–Schmidt), seeded for reproducibility.
pub fn sampled_max_abs<T: Real>(l: &StructureConstants<T>, samples: usize, seed: u64) -> T {
    let n = l.dim();
    if n < 2 {
        return T::zero();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = T::zero();
    let mut drawn = 0;
    while drawn < samples {
        let mut gauss = || -> DVector<T> {
            DVector::from_fn(n, |_, _| lit::<T>(StandardNormal.sample(&mut rng)))
        };
        let u = gauss();
        let v = gauss();
        let nu = u.norm();
        if nu <= lit::<T>(1e-8) {
            continue;
        }
        let u = u / nu;
        let w = &v - &u * u.dot(&v);
        let nw = w.norm();
        if nw <= lit::<T>(1e-8) {
            continue;
        }
        let w = w / nw;
        worst = worst.max(curvature_unchecked(l, &u, &w).abs());
        drawn += 1;
    }
    worst
}

/// Frame table with the sampled maximum attached.
pub fn curvature_table_sampled<T: Real>(
    l: &StructureConstants<T>,
    samples: usize,
    seed: u64,
) -> CurvatureTable<T> {
    let mut t = curvature_table(l);
    t.sampled_max = Some(sampled_max_abs(l, samples, seed));
    t
}

/// Closed-form table for `ℝⁿ ⋊ ℝ` with `[Y, V_j] = Σ_i c_ij V_i`; frame
/// `(V_1, …, V_n, Y)`.
pub fn solvable_curvature_closed_form<T: Real>(c: &DMatrix<T>) -> CurvatureTable<T> {
    assert!(c.is_square(), "C must be square");
    let n = c.nrows();
    let quarter = lit::<T>(0.25);
    CurvatureTable::from_fn(n + 1, |i, j| {
        if j == n {
            let mut k = T::zero();
            for m in 0..n {
                let d = c[(i, m)] - c[(m, i)];
                k += quarter * d * d - c[(m, i)] * c[(m, i)];
            }
            k
        } else {
            let s = c[(i, j)] + c[(j, i)];
            quarter * s * s - c[(i, i)] * c[(j, j)]
        }
    })
}

/// Closed-form table for the bundle algebra `[Y₁, Y₂] = η V₁` with fiber
/// dimension `n`; frame `(V_1, …, V_n, Y₁, Y₂)`.
pub fn nil_bundle_curvature_closed_form<T: Real>(n: usize, eta: T) -> CurvatureTable<T> {
    let e2 = eta * eta;
    let (y1, y2) = (n, n + 1);
    CurvatureTable::from_fn(n + 2, |i, j| {
        if (i, j) == (y1, y2) {
            -lit::<T>(0.75) * e2
        } else if i == 0 && (j == y1 || j == y2) {
            lit::<T>(0.25) * e2
        } else {
            T::zero()
        }
    })
}

/// `κ = Σ_{i,j} (c_ii c_jj − c_ij c_ji) = (tr C)² − tr C²`, twice the `x^{n−2}`
/// coefficient of `det(x − C)`; similarity invariant.
pub fn kappa_invariant<T: Real>(c: &DMatrix<T>) -> T {
    let n = c.nrows();
    let mut k = T::zero();
    for i in 0..n {
        for j in 0..n {
            k += c[(i, i)] * c[(j, j)] - c[(i, j)] * c[(j, i)];
        }
    }
    k
}

/// Margins of the two trace/curvature inequalities for a solvable algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceBoundReport<T> {
    pub trace: T,
    pub a: T,
    pub kappa: T,
    /// `(n²+n)a + κ − Tr(CᵀC)`; nonnegative when the upper bound holds.
    pub upper_margin: T,
    /// `2·Tr(CᵀC) − max|K|`; nonnegative when the lower bound holds.
    pub lower_margin: T,
    pub holds: bool,
}

/// Checks `Tr(CᵀC) ≤ (n²+n)a + κ` and `max|K| ≤ 2·Tr(CᵀC)` with `a` the frame
/// maximum of `|K|`.
pub fn trace_bounds_check<T: Real>(c: &DMatrix<T>, a: T) -> TraceBoundReport<T> {
    let n = T::from_usize(c.nrows()).unwrap();
    let trace = c.norm_squared();
    let kappa = kappa_invariant(c);
    let max_k = solvable_curvature_closed_form(c).max_abs();
    let slack = lit::<T>(1e-12) * (T::one() + trace);
    let upper_margin = (n * n + n) * a + kappa - trace;
    let lower_margin = lit::<T>(2.0) * trace - max_k;
    TraceBoundReport {
        trace,
        a,
        kappa,
        upper_margin,
        lower_margin,
        holds: upper_margin >= -slack && lower_margin >= -slack,
    }
}

/// Vertical/horizontal decomposition of a frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameSplit {
    pub vertical: Vec<usize>,
    pub horizontal: Vec<usize>,
}

impl FrameSplit {
    pub fn new(n: usize, vertical: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; n];
        for &v in &vertical {
            if v >= n || seen[v] {
                return Err(Error::InvalidInput(format!("bad vertical index {v}")));
            }
            seen[v] = true;
        }
        let horizontal = (0..n).filter(|&i| !seen[i]).collect();
        Ok(Self {
            vertical,
            horizontal,
        })
    }
}

/// Base algebra of a submersion: horizontal components of horizontal brackets.
/// The vertical span must be an ideal.
pub fn quotient_algebra<T: Real>(
    total: &StructureConstants<T>,
    split: &FrameSplit,
) -> Result<StructureConstants<T>> {
    let n = total.dim();
    for &v in &split.vertical {
        for x in 0..n {
            if split.horizontal.iter().any(|&h| total.get(v, x, h) != T::zero()) {
                return Err(Error::InvalidInput("vertical span is not an ideal".into()));
            }
        }
    }
    let h = &split.horizontal;
    let mut entries = Vec::new();
    for a in 0..h.len() {
        for b in (a + 1)..h.len() {
            for c in 0..h.len() {
                let v = total.get(h[a], h[b], h[c]);
                if v != T::zero() {
                    entries.push((a, b, c, v));
                }
            }
        }
    }
    if h.is_empty() {
        return Err(Error::InvalidInput("no horizontal directions".into()));
    }
    StructureConstants::from_entries(h.len(), entries)
}

/// `max |K_base(X,Y) − K_total(X,Y) − ¾|[X,Y]^V|²|` over horizontal frame pairs,
/// with `base` indexed by position in `split.horizontal`.
pub fn oneill_defect<T: Real>(
    total: &StructureConstants<T>,
    split: &FrameSplit,
    base: &CurvatureTable<T>,
) -> Result<T> {
    let n = total.dim();
    let h = &split.horizontal;
    if base.dim() != h.len() {
        return Err(Error::DimensionMismatch(
            "base table must cover the horizontal frame".into(),
        ));
    }
    let mut worst = T::zero();
    for a in 0..h.len() {
        for b in (a + 1)..h.len() {
            let k_total = curvature_unchecked(total, &basis(n, h[a]), &basis(n, h[b]));
            let vert: T = split
                .vertical
                .iter()
                .map(|&v| total.get(h[a], h[b], v))
                .fold(T::zero(), |acc, x| acc + x * x);
            let defect = base.get(a, b) - k_total - lit::<T>(0.75) * vert;
            worst = worst.max(defect.abs());
        }
    }
    Ok(worst)
}

/// Outcome of the vertical-form bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct FormBoundReport<T> {
    /// `max |dω(X,Y)|²` over vertical generators and horizontal frame pairs.
    pub pair_max: T,
    /// `8a/3`.
    pub pair_bound: T,
    /// `max |dω|²` over vertical generators.
    pub norm_max: T,
    /// `4a·n(n−1)/3` with `n` the total dimension.
    pub norm_bound: T,
    pub holds: bool,
}

/// Checks `|dω(X,Y)|² ≤ (8a/3)|ω|²` and `|dω|² ≤ (4a n(n−1)/3)|ω|²` for each
/// unit vertical generator `ω = V_i♭`.
pub fn oneill_form_bound_check<T: Real>(
    l: &StructureConstants<T>,
    split: &FrameSplit,
    a: T,
) -> Result<FormBoundReport<T>> {
    let n = l.dim();
    let d1 = exterior_derivative(l, 1)?;
    let pairs = crate::lie::FormBasis::new(n, 2)?;
    let mut pair_max = T::zero();
    let mut norm_max = T::zero();
    for &v in &split.vertical {
        let col = d1.column(v);
        norm_max = norm_max.max(col.norm_squared());
        for (r, t) in pairs.tuples().enumerate() {
            if split.horizontal.contains(&t[0]) && split.horizontal.contains(&t[1]) {
                pair_max = pair_max.max(col[r] * col[r]);
            }
        }
    }
    let nn = T::from_usize(n).unwrap();
    let pair_bound = lit::<T>(8.0 / 3.0) * a;
    let norm_bound = lit::<T>(4.0 / 3.0) * a * nn * (nn - T::one());
    let slack = lit::<T>(1e-12);
    Ok(FormBoundReport {
        pair_max,
        pair_bound,
        norm_max,
        norm_bound,
        holds: pair_max <= pair_bound + slack && norm_max <= norm_bound + slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::heisenberg_scaled;

    fn solvable(c: &DMatrix<f64>) -> StructureConstants<f64> {
        let n = c.nrows();
        StructureConstants::from_fn(n + 1, |i, j, k| {
            // only (i < j) is queried; [V_i, Y] = -[Y, V_i]
            if j == n && k < n {
                -c[(k, i)]
            } else {
                0.0
            }
        })
    }

    fn nil(bs: &[f64]) -> StructureConstants<f64> {
        let n = bs.len();
        StructureConstants::from_fn(n + 2, |i, j, k| {
            if (i, j) == (n, n + 1) && k < n {
                bs[k]
            } else {
                0.0
            }
        })
    }

    #[test]
    fn ad_star_identity() {
        let c = DMatrix::from_row_slice(2, 2, &[0.3, 1.0, -0.5, 0.2]);
        let l = solvable(&c);
        for u in 0..3 {
            let ads = ad_star(&l, &basis(3, u));
            for v in 0..3 {
                for w in 0..3 {
                    let lhs = (&ads * basis::<f64>(3, v)).dot(&basis(3, w));
                    let rhs = basis::<f64>(3, v).dot(&l.bracket(&basis(3, u), &basis(3, w)));
                    assert!((lhs - rhs).abs() < 1e-15);
                }
            }
        }
        // ad*_{V_i} V_j = −c_ji Y
        let ads = ad_star(&l, &basis(3, 0));
        let img = &ads * basis::<f64>(3, 1);
        assert!((img[2] + c[(1, 0)]).abs() < 1e-15);
        assert_eq!(ad_star(&StructureConstants::<f64>::abelian(2), &basis(2, 0)), DMatrix::zeros(2, 2));
    }

    #[test]
    fn nil_bundle_adjoints() {
        let mu = 1.7;
        let l = nil(&[mu, 0.0]);
        let (v1, y1, y2) = (basis::<f64>(4, 0), basis::<f64>(4, 2), basis::<f64>(4, 3));
        assert!((&ad_star(&l, &y1) * &v1 - &y2 * mu).norm() < 1e-15);
        assert!((&ad_star(&l, &y2) * &v1 + &y1 * mu).norm() < 1e-15);
    }

    #[test]
    fn orthonormality_enforced() {
        let l = nil(&[1.0]);
        let u = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let v = DVector::from_vec(vec![1.0, 1.0, 0.0]);
        assert!(matches!(sectional_curvature(&l, &u, &v), Err(Error::NotOrthonormal { .. })));
    }

    #[test]
    fn nil_bundle_values() {
        let t = curvature_table(&nil(&[1.0, 0.0]));
        assert!((t.get(2, 3) + 0.75).abs() < 1e-15);
        assert!((t.get(3, 2) + 0.75).abs() < 1e-15);
        assert!((t.get(0, 2) - 0.25).abs() < 1e-15);
        assert_eq!(t.get(1, 2), 0.0);
        assert!(t.max_abs_diff(&nil_bundle_curvature_closed_form(2, 1.0)) < 1e-15);
        let t2 = curvature_table(&nil(&[2.0, 0.0, 0.0]));
        assert!(t2.max_abs_diff(&nil_bundle_curvature_closed_form(3, 2.0)) < 1e-12);
        assert_eq!(nil_bundle_curvature_closed_form(2, 0.0).max_abs(), 0.0);
    }

    #[test]
    fn vertical_homothety_scales_curvature() {
        for eta in [1.0, 2.0, 3.0] {
            let lambda = 1.5;
            let base = curvature_table(&nil(&[eta, 0.0]));
            let scaled = curvature_table(&nil(&[lambda * eta, 0.0]));
            assert!((scaled.get(2, 3) - lambda * lambda * base.get(2, 3)).abs() < 1e-12);
        }
    }

    #[test]
    fn solvable_closed_form_example() {
        let c = DMatrix::<f64>::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let t: CurvatureTable<f64> = solvable_curvature_closed_form(&c);
        assert!((t.get(0, 2) - 0.25).abs() < 1e-15);
        assert!((t.get(1, 2) + 0.75).abs() < 1e-15);
        assert!((t.get(0, 1) - 0.25).abs() < 1e-15);
        assert!(t.max_abs_diff(&curvature_table(&solvable(&c))) < 1e-15);
        assert_eq!(solvable_curvature_closed_form(&DMatrix::<f64>::zeros(3, 3)).max_abs(), 0.0);
    }

    #[test]
    fn rotation_example_is_flat() {
        let two_pi = 2.0 * std::f64::consts::PI;
        let b = DMatrix::from_row_slice(2, 2, &[0.0, two_pi, -two_pi, 0.0]);
        assert!(curvature_table(&solvable(&b)).max_abs() < 1e-12);
    }

    #[test]
    fn kappa_and_trace_bounds() {
        let c = DMatrix::<f64>::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(kappa_invariant(&c), 0.0);
        let r: TraceBoundReport<f64> = trace_bounds_check(&c, 0.75);
        assert!(r.holds);
        assert_eq!(r.trace, 1.0);
        assert!((r.upper_margin - 3.5).abs() < 1e-15);
        let z = trace_bounds_check(&DMatrix::<f64>::zeros(2, 2), 0.0);
        assert!(z.holds && z.trace == 0.0);
    }

    #[test]
    fn symmetric_and_sampled() {
        let l = heisenberg_scaled(1.0, 0.5, 2.0, 0.3).unwrap();
        let u = DVector::from_vec(vec![0.6, 0.8, 0.0]);
        let v = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let a: f64 = sectional_curvature(&l, &u, &v).unwrap();
        let b: f64 = sectional_curvature(&l, &v, &u).unwrap();
        assert!((a - b).abs() < 1e-12);
        let t = curvature_table_sampled(&l, DEFAULT_PLANE_SAMPLES, 7);
        let again = curvature_table_sampled(&l, DEFAULT_PLANE_SAMPLES, 7);
        assert_eq!(t, again);
        // every plane curvature is a convex-ish combination bounded by frame data
        assert!(t.sampled_max.unwrap() <= 3.0 * t.max_abs());
    }

    #[test]
    fn oneill_cases() {
        let l = nil(&[1.0, 0.0]);
        let split = FrameSplit::new(4, vec![0, 1]).unwrap();
        let base = curvature_table(&quotient_algebra(&l, &split).unwrap());
        assert_eq!(base.max_abs(), 0.0);
        assert!(oneill_defect(&l, &split, &base).unwrap() < 1e-15);
        let flat = StructureConstants::<f64>::abelian(4);
        assert_eq!(oneill_defect(&flat, &split, &base).unwrap(), 0.0);
        let h = heisenberg_scaled(1.0, 1.0, 2.0, 0.2).unwrap();
        let hs = FrameSplit::new(3, vec![2]).unwrap();
        let hb = curvature_table(&quotient_algebra(&h, &hs).unwrap());
        assert!(oneill_defect(&h, &hs, &hb).unwrap() <= 1e-12);
    }

    #[test]
    fn form_bounds() {
        let flat = StructureConstants::<f64>::abelian(3);
        let split = FrameSplit::new(3, vec![0]).unwrap();
        let r = oneill_form_bound_check(&flat, &split, 0.0).unwrap();
        assert!(r.holds && r.pair_max == 0.0);
        let l = nil(&[1.0, 0.0]);
        let split = FrameSplit::new(4, vec![0, 1]).unwrap();
        let r = oneill_form_bound_check(&l, &split, 0.75).unwrap();
        assert_eq!(r.pair_max, 1.0);
        assert!((r.pair_bound - 2.0).abs() < 1e-15);
        assert!(r.holds);
    }

    #[test]
    fn csv_layout() {
        let t = nil_bundle_curvature_closed_form(1, 1.0);
        assert_eq!(t.to_csv(), "pair_i,pair_j,K\n1,2,0.25\n1,3,0.25\n2,3,-0.75\n");
    }
}
