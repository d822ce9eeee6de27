//! Mapping tori of toral automorphisms as solvmanifolds `ℝⁿ ⋊_B ℝ`.
//!
//! Frame convention: vertical fields `V_1..V_n` occupy indices `0..n`, the
//! transverse field `Y` is index `n`, and `[Y, V_j] = Σ_i C_ij V_i` where `C`
//! is the matrix of `ad_Y` on the vertical span in the current frame. A
//! vertical frame `P_v` yields `C = P_v⁻¹ B P_v`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::curvature::{kappa_invariant, solvable_curvature_closed_form};
use crate::error::{Error, Result};
use crate::intlat::{
    betti1_mapping_torus, principal_log, verify_log, AbelianizationReport, IntegerMatrix,
    RationalMatrix,
};
use crate::lie::{spectrum, SpectrumReport, StructureConstants};
use crate::scalar::{lit, norm_inf, to_f64, Real};

/// Default singular-value threshold for `d`, `d′` and Jordan chains.
pub const RANK_TOL: f64 = 1e-9;
/// Tolerance of the `exp(B) = A` contract.
pub const LOG_TOL: f64 = 1e-8;
/// Absolute cap on the small-eigenvalue threshold `10ε²`.
pub const SMALL_CAP: f64 = 1e-3;
/// Minimum acceptable empirical floor for semisimple `B`.
pub const FLOOR_TOL: f64 = 1e-4;

/// Suspension data: `A ∈ SL_n(ℤ)` with a real logarithm `B`.
#[derive(Clone, Debug)]
pub struct MappingTorusBundle<T> {
    a: IntegerMatrix,
    b: DMatrix<T>,
}

impl<T: Real> MappingTorusBundle<T> {
    /// Checks `det A = 1`, `‖exp B − A‖∞ ≤ 1e−8` and `|tr B| ≤ 1e−8`.
    pub fn new(a: IntegerMatrix, b: DMatrix<T>) -> Result<Self> {
        if !a.is_square() || b.shape() != (a.nrows(), a.ncols()) {
            return Err(Error::DimensionMismatch("A and B must be square of equal size".into()));
        }
        let det = a.determinant();
        if det != 1.into() {
            return Err(Error::NotUnimodular {
                det: det.to_string(),
            });
        }
        let tol = lit::<T>(LOG_TOL);
        if !verify_log(&a.to_real::<T>(), &b, tol) {
            return Err(Error::InvalidInput("exp(B) does not reproduce A".into()));
        }
        if b.trace().abs() > tol {
            return Err(Error::InvalidInput("B must be traceless".into()));
        }
        Ok(Self { a, b })
    }

    /// Uses the principal logarithm of `A`.
    pub fn from_principal_log(a: IntegerMatrix) -> Result<Self> {
        let b = principal_log(&a.to_real::<T>(), lit::<T>(1e-12))?;
        Self::new(a, b)
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &IntegerMatrix {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }

    pub fn algebra(&self) -> StructureConstants<T> {
        solvable_algebra(&self.b)
    }

    pub fn betti1(&self) -> Result<AbelianizationReport> {
        betti1_mapping_torus(&self.a)
    }
}

/// The algebra `ℝⁿ ⋊_C ℝ`: `[Y, V_j] = Σ_i C_ij V_i`, all other brackets zero.
pub fn solvable_algebra<T: Real>(c: &DMatrix<T>) -> StructureConstants<T> {
    assert!(c.is_square(), "C must be square");
    let n = c.nrows();
    StructureConstants::from_fn(n + 1, |i, j, k| {
        if j == n && k < n {
            -c[(k, i)]
        } else {
            T::zero()
        }
    })
}

/// Reads `C` back from a solvable algebra with `Y` last.
pub fn vertical_block<T: Real>(l: &StructureConstants<T>) -> DMatrix<T> {
    let n = l.dim() - 1;
    DMatrix::from_fn(n, n, |i, j| l.get(n, j, i))
}

/// `C = P_v⁻¹ B P_v`, rejecting singular frames.
pub fn conjugate<T: Real>(b: &DMatrix<T>, p_v: &DMatrix<T>) -> Result<DMatrix<T>> {
    let inv = p_v
        .clone()
        .try_inverse()
        .ok_or(Error::SingularFrame { ratio: 0.0 })?;
    Ok(inv * b * p_v)
}

/// `Δ¹` on invariant forms in the frame `(V_1..V_n, Y)`: `diag(C·Cᵀ, 0)`.
pub fn laplacian1_fast<T: Real>(c: &DMatrix<T>) -> DMatrix<T> {
    let n = c.nrows();
    let mut out = DMatrix::zeros(n + 1, n + 1);
    out.view_mut((0, 0), (n, n)).copy_from(&(c * c.transpose()));
    out
}

fn rank_cut<T: Real>(sv: &[T], tol: T) -> Result<usize> {
    let smax = sv.iter().fold(T::one(), |acc, &s| acc.max(s));
    let cut = tol * smax;
    let ten = lit::<T>(10.0);
    for &s in sv {
        if s > cut / ten && s < cut * ten {
            return Err(Error::RankAmbiguous {
                value: to_f64(s),
                tol: to_f64(cut),
            });
        }
    }
    Ok(sv.iter().filter(|&&s| s >= cut * ten).count())
}

fn numeric_rank<T: Real>(m: &DMatrix<T>, tol: T) -> Result<usize> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0);
    }
    let sv = m.clone().svd(false, false).singular_values;
    rank_cut(sv.as_slice(), tol)
}

/// `(d, d′)`: dimensions of `ker Bⁿ` and `ker B`. Integer matrices take an
/// exact rational path; others use singular values at `rank_tol`.
pub fn invariants_dd<T: Real>(b: &DMatrix<T>, rank_tol: T) -> Result<(usize, usize)> {
    let n = b.nrows();
    if let Some(exact) = IntegerMatrix::from_real(b) {
        let q = exact.to_rational();
        return Ok((n - q.pow(n).rank(), n - q.rank()));
    }
    let mut bn = DMatrix::identity(n, n);
    for _ in 0..n {
        bn = &bn * b;
    }
    Ok((n - numeric_rank(&bn, rank_tol)?, n - numeric_rank(b, rank_tol)?))
}

/// Qualitative predictions for `Δ¹_inv` from `d` and `d′`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SmallEigenvaluePrediction {
    pub d: usize,
    pub d_prime: usize,
    /// Some metric family has small eigenvalues iff `d ≠ d′`.
    pub has_small: bool,
    /// Index (among nonzero eigenvalues) bounded below along any family: `d − d′ + 1`.
    pub floor_index: usize,
    /// `d = n`: the group is nilpotent.
    pub nilpotent: bool,
    /// `d′ = n`: `B = 0` and the manifold is a torus.
    pub torus: bool,
}

pub fn predict_small_eigenvalues<T: Real>(b: &DMatrix<T>, rank_tol: T) -> Result<SmallEigenvaluePrediction> {
    let n = b.nrows();
    let (d, d_prime) = invariants_dd(b, rank_tol)?;
    Ok(SmallEigenvaluePrediction {
        d,
        d_prime,
        has_small: d != d_prime,
        floor_index: d - d_prime + 1,
        nilpotent: d == n,
        torus: d_prime == n,
    })
}

/// Linear algebra needed to build Jordan chains of the zero eigenvalue.
trait ChainField {
    type Vector: Clone;
    fn apply(&self, v: &Self::Vector) -> Self::Vector;
    fn kernel_of_power(&self, j: usize) -> Result<Vec<Self::Vector>>;
    fn rank(&self, vs: &[Self::Vector]) -> Result<usize>;
    fn to_f64(&self, v: &Self::Vector) -> Vec<f64>;
}

struct ExactField {
    b: RationalMatrix,
}

impl ChainField for ExactField {
    type Vector = Vec<BigRational>;

    fn apply(&self, v: &Self::Vector) -> Self::Vector {
        self.b.mul_vec(v)
    }

    fn kernel_of_power(&self, j: usize) -> Result<Vec<Self::Vector>> {
        Ok(self.b.pow(j).kernel())
    }

    fn rank(&self, vs: &[Self::Vector]) -> Result<usize> {
        if vs.is_empty() {
            return Ok(0);
        }
        let m = RationalMatrix::from_fn(vs.len(), vs[0].len(), |i, j| vs[i][j].clone());
        Ok(m.rank())
    }

    fn to_f64(&self, v: &Self::Vector) -> Vec<f64> {
        use num_traits::ToPrimitive;
        v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

struct NumericField<T> {
    b: DMatrix<T>,
    tol: T,
}

impl<T: Real> ChainField for NumericField<T> {
    type Vector = DVector<T>;

    fn apply(&self, v: &Self::Vector) -> Self::Vector {
        &self.b * v
    }

    fn kernel_of_power(&self, j: usize) -> Result<Vec<Self::Vector>> {
        let n = self.b.nrows();
        let mut p = DMatrix::identity(n, n);
        for _ in 0..j {
            p = &p * &self.b;
        }
        let svd = p.svd(false, true);
        let sv = svd.singular_values.as_slice();
        rank_cut(sv, self.tol)?;
        let smax = sv.iter().fold(T::one(), |acc, &s| acc.max(s));
        let vt = svd.v_t.expect("requested V^T");
        Ok((0..sv.len())
            .filter(|&i| sv[i] <= self.tol * smax)
            .map(|i| vt.row(i).transpose())
            .collect())
    }

    fn rank(&self, vs: &[Self::Vector]) -> Result<usize> {
        if vs.is_empty() {
            return Ok(0);
        }
        let mut m = DMatrix::from_columns(vs);
        for mut col in m.column_iter_mut() {
            let nrm = col.norm();
            if nrm > T::zero() {
                col /= nrm;
            }
        }
        numeric_rank(&m, self.tol)
    }

    fn to_f64(&self, v: &Self::Vector) -> Vec<f64> {
        v.iter().map(|&x| to_f64(x)).collect()
    }
}

/// A frame adapted to the zero generalized eigenspace `E₀` of `B`.
#[derive(Clone, Debug)]
pub struct JordanFrame<T> {
    /// Columns: chain vectors in level order, then an orthonormal basis of `E₀^⊥`.
    pub p0: DMatrix<T>,
    /// `(chain, level)` of each of the first `d` columns; level 1 spans `ker B`.
    pub slots: Vec<(usize, usize)>,
    /// Chain lengths, indexed by chain id.
    pub chain_lengths: Vec<usize>,
    pub d: usize,
    pub d_prime: usize,
    /// Whether the exact rational path produced the chains.
    pub exact: bool,
}

impl<T: Real> JordanFrame<T> {
    /// Whether column `i` (0-based, `i < d`) lies in the image of `B` restricted to `E₀`.
    pub fn is_non_top(&self, i: usize) -> bool {
        let (chain, level) = self.slots[i];
        level < self.chain_lengths[chain]
    }
}

fn build_chains<F: ChainField>(f: &F, n: usize) -> Result<Vec<Vec<F::Vector>>> {
    let mut kernels: Vec<Vec<F::Vector>> = vec![Vec::new()];
    for j in 1..=n {
        let k = f.kernel_of_power(j)?;
        if k.len() == kernels.last().map_or(0, Vec::len) {
            break;
        }
        kernels.push(k);
    }
    let s = kernels.len() - 1;
    let mut tops: Vec<(usize, F::Vector)> = Vec::new();
    for j in (1..=s).rev() {
        let mut existing = kernels[j - 1].clone();
        for (l, t) in &tops {
            let mut v = t.clone();
            for _ in 0..(l - j) {
                v = f.apply(&v);
            }
            existing.push(v);
        }
        let mut r = f.rank(&existing)?;
        for cand in &kernels[j] {
            existing.push(cand.clone());
            let r2 = f.rank(&existing)?;
            if r2 > r {
                tops.push((j, cand.clone()));
                r = r2;
            } else {
                existing.pop();
            }
        }
    }
    Ok(tops
        .into_iter()
        .map(|(l, t)| {
            let mut chain = vec![t];
            for _ in 1..l {
                let next = f.apply(chain.last().unwrap());
                chain.push(next);
            }
            chain.reverse();
            chain
        })
        .collect())
}

/// Jordan chains of the zero eigenvalue, ordered by level (all `ker B`
/// vectors first, shorter chains first within a level), completed by an
/// orthonormal basis of `E₀^⊥`.
pub fn jordan_zero_chain<T: Real>(b: &DMatrix<T>, rank_tol: T) -> Result<JordanFrame<T>> {
    if !b.is_square() {
        return Err(Error::DimensionMismatch("B must be square".into()));
    }
    let n = b.nrows();
    let (chains_f64, exact) = match IntegerMatrix::from_real(b) {
        Some(ib) => {
            let f = ExactField { b: ib.to_rational() };
            let chains = build_chains(&f, n)?;
            (chains.iter().map(|c| c.iter().map(|v| f.to_f64(v)).collect::<Vec<_>>()).collect::<Vec<_>>(), true)
        }
        None => {
            let f = NumericField { b: b.clone(), tol: rank_tol };
            let chains = build_chains(&f, n)?;
            (chains.iter().map(|c| c.iter().map(|v| f.to_f64(v)).collect::<Vec<_>>()).collect::<Vec<_>>(), false)
        }
    };
    let mut order: Vec<usize> = (0..chains_f64.len()).collect();
    order.sort_by_key(|&c| chains_f64[c].len());
    let chain_lengths: Vec<usize> = chains_f64.iter().map(Vec::len).collect();
    let max_len = chain_lengths.iter().copied().max().unwrap_or(0);
    let mut columns: Vec<DVector<T>> = Vec::new();
    let mut slots = Vec::new();
    for level in 1..=max_len {
        for &c in &order {
            if chain_lengths[c] >= level {
                let v = &chains_f64[c][level - 1];
                columns.push(DVector::from_iterator(n, v.iter().map(|&x| lit::<T>(x))));
                slots.push((c, level));
            }
        }
    }
    let d = columns.len();
    let d_prime = chain_lengths.len();
    columns.extend(orthonormal_complement(&columns, n));
    let p0 = if n == 0 {
        DMatrix::zeros(0, 0)
    } else {
        DMatrix::from_columns(&columns)
    };
    Ok(JordanFrame {
        p0,
        slots,
        chain_lengths,
        d,
        d_prime,
        exact,
    })
}

/// Orthonormal basis of the orthogonal complement of `span(vs)`, picked from
/// the standard basis by Gram–Schmidt.
fn orthonormal_complement<T: Real>(vs: &[DVector<T>], n: usize) -> Vec<DVector<T>> {
    let mut basis: Vec<DVector<T>> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                w -= q * q.dot(&w);
            }
        }
        let nrm = w.norm();
        if nrm > lit::<T>(1e-12) {
            basis.push(w / nrm);
        }
    }
    let start = basis.len();
    for i in 0..n {
        if basis.len() == n {
            break;
        }
        let mut w = DVector::zeros(n);
        w[i] = T::one();
        for _ in 0..2 {
            for q in &basis {
                w -= q * q.dot(&w);
            }
        }
        let nrm = w.norm();
        if nrm > lit::<T>(1e-6) {
            basis.push(w / nrm);
        }
    }
    basis.split_off(start)
}

/// Metric family `V_i^ε = ε^{e_i} V_i` on a Jordan-adapted frame.
#[derive(Clone, Debug)]
pub struct CollapseFamily<T> {
    pub frame: JordanFrame<T>,
    /// `C` in the unscaled frame `P₀`.
    pub c0: DMatrix<T>,
    /// `ν_i(ε) = ε^{exponents[i]}`.
    pub exponents: Vec<i32>,
    pub k: usize,
}

impl<T: Real> CollapseFamily<T> {
    /// `C_ε`, entries `c_ij · ε^{e_j − e_i}`.
    pub fn c_eps(&self, eps: T) -> DMatrix<T> {
        let e = &self.exponents;
        DMatrix::from_fn(self.c0.nrows(), self.c0.ncols(), |i, j| {
            let c = self.c0[(i, j)];
            if c == T::zero() {
                c
            } else {
                c * eps.powi(e[j] - e[i])
            }
        })
    }

    /// Vertical frame `P₀ · diag(ν(ε))`.
    pub fn vertical_frame(&self, eps: T) -> DMatrix<T> {
        let nu = DVector::from_iterator(self.exponents.len(), self.exponents.iter().map(|&e| eps.powi(e)));
        &self.frame.p0 * DMatrix::from_diagonal(&nu)
    }

    pub fn algebra(&self, eps: T) -> StructureConstants<T> {
        solvable_algebra(&self.c_eps(eps))
    }
}

/// Scaling recipe producing exactly `k` small eigenvalues of `Δ¹_inv`.
///
/// With the frame in level order, let `m − 1` be the (1-based) position of
/// the `k`-th column lying in `B(E₀)`; then `ν_i = ε^{−(1+m−i)}` for `i < m`
/// and `ν_i = ε^{−1}` otherwise. For a single nontrivial Jordan block this is
/// `m = d′ + k`; `k = 0` is the pure homothety.
pub fn collapse_family<T: Real>(b: &DMatrix<T>, k: usize, rank_tol: T) -> Result<CollapseFamily<T>> {
    let frame = jordan_zero_chain(b, rank_tol)?;
    let n = b.nrows();
    let max = frame.d - frame.d_prime;
    if k > max {
        return Err(Error::KTooLarge { k, max });
    }
    let cut = if k == 0 {
        0
    } else {
        let pos = (0..frame.d)
            .filter(|&i| frame.is_non_top(i))
            .nth(k - 1)
            .expect("k ≤ d − d′ non-top columns");
        pos + 2
    };
    let exponents: Vec<i32> = (1..=n)
        .map(|i| if i < cut { -((1 + cut - i) as i32) } else { -1 })
        .collect();
    let c0 = if frame.exact && frame.d == n {
        exact_conjugate(b, &frame.p0)?
    } else {
        conjugate(b, &frame.p0)?
    };
    Ok(CollapseFamily {
        frame,
        c0,
        exponents,
        k,
    })
}

fn exact_conjugate<T: Real>(b: &DMatrix<T>, p: &DMatrix<T>) -> Result<DMatrix<T>> {
    let (Some(bq), Some(pq)) = (RationalMatrix::from_real(b), RationalMatrix::from_real(p)) else {
        return conjugate(b, p);
    };
    let n = p.nrows();
    // P⁻¹ via rref of [P | I]
    let aug = RationalMatrix::from_fn(n, 2 * n, |i, j| {
        if j < n {
            pq[(i, j)].clone()
        } else if j - n == i {
            BigRational::from_integer(1.into())
        } else {
            BigRational::zero()
        }
    });
    let (r, pivots) = aug.rref();
    if pivots.len() < n || pivots.iter().any(|&c| c >= n) {
        return Err(Error::SingularFrame { ratio: 0.0 });
    }
    let inv = RationalMatrix::from_fn(n, n, |i, j| r[(i, j + n)].clone());
    Ok(inv.mul(&bq).mul(&pq).to_real())
}

/// One grid point of a collapse sweep.
#[derive(Clone, Debug)]
pub struct CollapseRow<T> {
    pub eps: T,
    pub spectrum: SpectrumReport<T>,
    pub trace: T,
    pub max_k: T,
    pub small_count: usize,
}

/// `min(10ε², 1e−3)`.
pub fn small_threshold<T: Real>(eps: T) -> T {
    (lit::<T>(10.0) * eps * eps).min(lit::<T>(SMALL_CAP))
}

#[derive(Clone, Debug)]
pub struct CollapseTable<T> {
    pub k: usize,
    pub rows: Vec<CollapseRow<T>>,
}

impl<T: Real> CollapseTable<T> {
    /// Columns `eps, lambda_1..lambda_m, trace, max_k, small_count`.
    pub fn to_csv(&self) -> String {
        let width = self.rows.iter().map(|r| r.spectrum.dim()).max().unwrap_or(0);
        let mut s = String::from("eps");
        for i in 1..=width {
            write!(s, ",lambda_{i}").unwrap();
        }
        s.push_str(",trace,max_k,small_count\n");
        for r in &self.rows {
            write!(s, "{:?}", to_f64(r.eps)).unwrap();
            for i in 0..width {
                match r.spectrum.eigenvalues.get(i) {
                    Some(&v) => write!(s, ",{:?}", to_f64(v)).unwrap(),
                    None => s.push(','),
                }
            }
            writeln!(s, ",{:?},{:?},{}", to_f64(r.trace), to_f64(r.max_k), r.small_count).unwrap();
        }
        s
    }
}

/// Sweeps `ε` over `grid` for the `k`-collapse of `B`; grid points run in
/// parallel and rows keep grid order.
pub fn run_collapse<T: Real>(b: &DMatrix<T>, k: usize, grid: &[T], rank_tol: T) -> Result<CollapseTable<T>> {
    if let Some(&bad) = grid.iter().find(|&&e| !(e > T::zero() && e <= T::one())) {
        return Err(Error::InvalidInput(format!("grid point {bad} outside (0, 1]")));
    }
    let family = collapse_family(b, k, rank_tol)?;
    let rows = grid
        .par_iter()
        .map(|&eps| collapse_row(&family, eps))
        .collect::<Result<Vec<_>>>()?;
    Ok(CollapseTable { k, rows })
}

fn collapse_row<T: Real>(family: &CollapseFamily<T>, eps: T) -> Result<CollapseRow<T>> {
    let c = family.c_eps(eps);
    let spectrum = spectrum(&solvable_algebra(&c), 1)?;
    let cut = small_threshold(eps);
    let small_count = spectrum.nonzero().iter().filter(|&&v| v < cut).count();
    Ok(CollapseRow {
        eps,
        trace: c.norm_squared(),
        max_k: solvable_curvature_closed_form(&c).max_abs(),
        spectrum,
        small_count,
    })
}

/// `‖r(B)‖ / (1 + ‖B‖)^{deg r}` where `r` is the square-free part of the
/// characteristic polynomial; zero iff `B` is diagonalizable over ℂ.
pub fn semisimplicity_defect<T: Real>(b: &DMatrix<T>) -> T {
    let n = b.nrows();
    if n == 0 {
        return T::zero();
    }
    let scale = T::one() + norm_inf(b);
    let cluster = lit::<T>(1e-6) * scale;
    let eig = b.complex_eigenvalues();
    let mut reps: Vec<(T, T)> = Vec::new();
    for ev in eig.iter() {
        let (re, im) = (ev.re, ev.im.abs());
        if !reps
            .iter()
            .any(|&(r, i)| (r - re).abs() <= cluster && (i - im).abs() <= cluster)
        {
            reps.push((re, im));
        }
    }
    let id = DMatrix::<T>::identity(n, n);
    let mut r = id.clone();
    let mut degree = 0;
    for (re, im) in reps {
        if im <= cluster {
            r *= b - &id * re;
            degree += 1;
        } else {
            let two = lit::<T>(2.0);
            let q = b * b - b * (two * re) + &id * (re * re + im * im);
            r *= q;
            degree += 2;
        }
    }
    norm_inf(&r) / scale.powi(degree)
}

/// Random vertical frame `Q · diag(exp(t·u)) · Q′` with `Q`, `Q′` Haar-orthogonal
/// and `u` uniform in `[−2, 2]ⁿ`; `t ∈ [0, 1]` shrinks the distortion.
#[derive(Clone, Debug)]
pub struct RandomFrame<T> {
    q: DMatrix<T>,
    u: DVector<T>,
    q2: DMatrix<T>,
}

impl<T: Real> RandomFrame<T> {
    pub fn sample(n: usize, rng: &mut ChaCha8Rng) -> Self {
        let q = random_orthogonal(n, rng);
        let u = DVector::from_fn(n, |_, _| lit::<T>(rng.random_range(-2.0..=2.0)));
        let q2 = random_orthogonal(n, rng);
        Self { q, u, q2 }
    }

    pub fn matrix(&self, t: T) -> DMatrix<T> {
        let d = self.u.map(|x| (x * t).exp());
        &self.q * DMatrix::from_diagonal(&d) * &self.q2
    }
}

/// Haar-distributed orthogonal matrix via sign-corrected QR.
pub fn random_orthogonal<T: Real>(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<T> {
    let g = DMatrix::from_fn(n, n, |_, _| lit::<T>(StandardNormal.sample(rng)));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < T::zero() {
            let mut col = q.column_mut(j);
            col.neg_mut();
        }
    }
    q
}

/// Empirical floor of the smallest nonzero invariant eigenvalue, all degrees,
/// over random metrics whose curvature trace stays under a cap.
#[derive(Clone, Debug)]
pub struct FloorReport<T> {
    /// `None` when no sampled metric has a nonzero eigenvalue (e.g. `B = 0`).
    pub floor: Option<T>,
    pub accepted: usize,
    pub rejected: usize,
    /// `(n²+n)·a + κ(B)`.
    pub trace_cap: T,
    pub passes: bool,
}

/// Samples `trials` frames; each frame's distortion is halved until
/// `Tr(CᵀC) ≤ (n²+n)·curvature_cap + κ(B)`, which keeps `C` in the
/// conjugacy orbit of `B`.
pub fn semisimple_floor<T: Real>(
    b: &DMatrix<T>,
    trials: usize,
    curvature_cap: T,
    seed: u64,
) -> Result<FloorReport<T>> {
    let n = b.nrows();
    let defect = semisimplicity_defect(b);
    if defect > lit::<T>(1e-8) {
        return Err(Error::NotSemisimple {
            defect: to_f64(defect),
        });
    }
    let nn = T::from_usize(n).unwrap();
    let trace_cap = (nn * nn + nn) * curvature_cap + kappa_invariant(b);
    let results = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let frame = RandomFrame::<T>::sample(n, &mut rng);
            let mut scale = T::one();
            for _ in 0..60 {
                let c = conjugate(b, &frame.matrix(scale))?;
                if c.norm_squared() <= trace_cap {
                    return smallest_nonzero_all_degrees(&c).map(Some);
                }
                scale *= lit::<T>(0.5);
            }
            Ok(None)
        })
        .collect::<Result<Vec<Option<Option<T>>>>>()?;
    let accepted = results.iter().filter(|r| r.is_some()).count();
    let floor = results
        .iter()
        .flatten()
        .flatten()
        .fold(None, |acc: Option<T>, &v| Some(acc.map_or(v, |a| a.min(v))));
    Ok(FloorReport {
        floor,
        accepted,
        rejected: trials - accepted,
        trace_cap,
        passes: floor.is_none_or(|f| f > lit::<T>(FLOOR_TOL)),
    })
}

fn smallest_nonzero_all_degrees<T: Real>(c: &DMatrix<T>) -> Result<Option<T>> {
    let l = solvable_algebra(c);
    let mut best: Option<T> = None;
    for p in 0..=l.dim() {
        if let Some(v) = spectrum(&l, p)?.smallest_nonzero() {
            best = Some(best.map_or(v, |b| b.min(v)));
        }
    }
    Ok(best)
}

/// The 4×4 matrix `[[A′, A″], [0, A′]]` with `A′ = [[2,1],[1,1]]`,
/// `A″ = [[0,1],[0,0]]`: two hyperbolic eigenvalues, each with a single
/// 2×2 Jordan block.
pub fn double_jordan_cat_map() -> IntegerMatrix {
    IntegerMatrix::from_rows(&[[2, 1, 0, 1], [1, 1, 0, 0], [0, 0, 2, 1], [0, 0, 1, 1]])
}

/// Logarithm of [`double_jordan_cat_map`] and the family `C_ε` of its
/// Jordan-frame rescaling.
#[derive(Clone, Debug)]
pub struct DoubleJordanFamily<T> {
    pub bundle: MappingTorusBundle<T>,
    /// `log e^λ` of the larger eigenvalue.
    pub lambda: T,
    /// Jordan frame `P` with `P⁻¹ B P = [[λ, e^{−λ}],[0, λ]] ⊕ [[−λ, e^{λ}],[0, −λ]]`.
    pub jordan_frame: DMatrix<T>,
    pub alpha: T,
}

impl<T: Real> DoubleJordanFamily<T> {
    pub fn new(alpha: T) -> Result<Self> {
        let a = double_jordan_cat_map();
        let af = a.to_real::<T>();
        let five = lit::<T>(5.0);
        let mu = (lit::<T>(3.0) + five.sqrt()) / lit::<T>(2.0);
        let lambda = mu.ln();
        let mut cols = Vec::new();
        for m in [mu, T::one() / mu] {
            let shifted = &af - DMatrix::identity(4, 4) * m;
            let sq = &shifted * &shifted;
            let svd = sq.svd(false, true);
            let vt = svd.v_t.expect("requested V^T");
            let sv = svd.singular_values;
            // kernel of (A − μ)² is 2-dimensional; pick a vector outside ker(A − μ)
            let mut idx: Vec<usize> = (0..4).collect();
            idx.sort_by(|&i, &j| sv[i].partial_cmp(&sv[j]).unwrap());
            let cand: Vec<DVector<T>> = idx[..2].iter().map(|&i| vt.row(i).transpose()).collect();
            let top = cand
                .into_iter()
                .max_by(|x, y| (&shifted * x).norm().partial_cmp(&(&shifted * y).norm()).unwrap())
                .unwrap();
            let head = &shifted * &top;
            cols.push(head);
            cols.push(top);
        }
        let jordan = DMatrix::from_columns(&cols);
        let c = Self::source_log(lambda);
        let b = &jordan * &c * jordan.clone().try_inverse().ok_or(Error::SingularFrame { ratio: 0.0 })?;
        let bundle = MappingTorusBundle::new(a, b)?;
        Ok(Self {
            bundle,
            lambda,
            jordan_frame: jordan,
            alpha,
        })
    }

    /// `[[λ, e^{−λ}],[0, λ]] ⊕ [[−λ, e^{λ}],[0, −λ]]`.
    pub fn source_log(lambda: T) -> DMatrix<T> {
        let mut c = DMatrix::zeros(4, 4);
        c[(0, 0)] = lambda;
        c[(0, 1)] = (-lambda).exp();
        c[(1, 1)] = lambda;
        c[(2, 2)] = -lambda;
        c[(2, 3)] = lambda.exp();
        c[(3, 3)] = -lambda;
        c
    }

    /// `diag(ε^α, ε^{α+1}e^λ, ε^α, ε^{α+1}e^{−λ})`, applied after the Jordan frame.
    pub fn scaling(&self, eps: T) -> DMatrix<T> {
        let a = eps.powf(self.alpha);
        let a1 = eps.powf(self.alpha + T::one());
        DMatrix::from_diagonal(&DVector::from_vec(vec![
            a,
            a1 * self.lambda.exp(),
            a,
            a1 * (-self.lambda).exp(),
        ]))
    }

    /// Vertical frame of the metric `g_ε` relative to the lattice frame.
    pub fn vertical_frame(&self, eps: T) -> DMatrix<T> {
        &self.jordan_frame * self.scaling(eps)
    }

    /// `[[λ, ε],[0, λ]] ⊕ [[−λ, ε],[0, −λ]]`.
    pub fn c_eps_closed_form(&self, eps: T) -> DMatrix<T> {
        let mut c = Self::source_log(self.lambda);
        c[(0, 1)] = eps;
        c[(2, 3)] = eps;
        c
    }
}

/// Dimension of `ker Δ¹_inv` next to `b₁` of the mapping torus.
pub fn harmonic_vs_betti<T: Real>(bundle: &MappingTorusBundle<T>) -> Result<(usize, usize)> {
    let kernel = spectrum(&bundle.algebra(), 1)?.kernel_dim;
    Ok((kernel, bundle.betti1()?.b1))
}
