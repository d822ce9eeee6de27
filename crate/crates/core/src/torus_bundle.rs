//! Principal `Tⁿ` bundles over `T²` and their nilpotent models.
//!
//! Frame convention: vertical `V_1..V_n` at indices `0..n`, horizontal
//! `Y₁ = n`, `Y₂ = n + 1`, and the single bracket `[Y₁, Y₂] = Σ b_i V_i`.

use std::fmt::{self, Write as _};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{Signed, Zero};

use crate::curvature::{curvature_table, oneill_defect, quotient_algebra, FrameSplit};
use crate::error::{Error, Result};
use crate::intlat::{gcd_completion, IntegerMatrix};
use crate::lie::{change_frame, direct_sum, eigenspace_split, spectrum, EigenspaceSplit, SpectrumReport, StructureConstants};
use crate::scalar::{binomial, lit, to_f64, Real};

/// Bundle with obstruction class `a ∈ ℤⁿ` over a base of area `base_volume`.
#[derive(Clone, Debug)]
pub struct TorusBundleOverT2<T> {
    a: Vec<BigInt>,
    reduction: Reduction,
    base_volume: T,
}

impl<T: Real> TorusBundleOverT2<T> {
    pub fn new(a: Vec<BigInt>, base_volume: T) -> Result<Self> {
        if !(base_volume > T::zero()) {
            return Err(Error::InvalidInput("base volume must be positive".into()));
        }
        let reduction = reduce(&a)?;
        Ok(Self {
            a,
            reduction,
            base_volume,
        })
    }

    pub fn from_obstruction(a: &[i64], base_volume: T) -> Result<Self> {
        Self::new(a.iter().map(|&x| BigInt::from(x)).collect(), base_volume)
    }

    pub fn fiber_dim(&self) -> usize {
        self.a.len()
    }

    pub fn obstruction(&self) -> &[BigInt] {
        &self.a
    }

    pub fn reduction(&self) -> &Reduction {
        &self.reduction
    }

    pub fn base_volume(&self) -> T {
        self.base_volume
    }

    /// `Vol(B)⁻² |V|²`.
    pub fn eigenvalue(&self, v_norm: T) -> T {
        v_norm * v_norm / (self.base_volume * self.base_volume)
    }
}

/// `M ≅ N_d × T^{n−1}` with `d = gcd(a)` and `P` unimodular, `P e₁ = a / d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    pub d: BigInt,
    pub p: IntegerMatrix,
    pub fiber_dim: usize,
}

impl fmt::Display for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.fiber_dim {
            1 => write!(f, "M ≅ N_{}", self.d),
            n => write!(f, "M ≅ N_{} × T^{}", self.d, n - 1),
        }
    }
}

/// Splits off the 3-dimensional nilmanifold factor of the bundle.
pub fn reduce(a: &[BigInt]) -> Result<Reduction> {
    if a.is_empty() {
        return Err(Error::InvalidInput("empty obstruction vector".into()));
    }
    let (d, p) = gcd_completion(a).map_err(|e| match e {
        Error::ZeroVector => Error::TrivialBundle,
        other => other,
    })?;
    Ok(Reduction {
        d: d.abs(),
        p,
        fiber_dim: a.len(),
    })
}

/// `[Y₁, Y₂] = Σ b_i V_i`, all other brackets zero.
pub fn nil_algebra<T: Real>(b: &[T]) -> StructureConstants<T> {
    let n = b.len();
    StructureConstants::from_fn(n + 2, |i, j, k| {
        if (i, j) == (n, n + 1) && k < n {
            b[k]
        } else {
            T::zero()
        }
    })
}

/// `η = |V|`.
pub fn vertical_norm<T: Real>(b: &[T]) -> T {
    b.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}

/// Predicted invariant spectrum of `Δᵖ` on the `n`-fiber model: `η²` with
/// multiplicity `C(n, p−1)`, zero elsewhere. Valid for `0 ≤ p ≤ n + 2`.
pub fn predict_spectrum<T: Real>(n: usize, p: usize, eta: T) -> Result<SpectrumReport<T>> {
    let total = n + 2;
    if p > total {
        return Err(Error::DegreeOutOfRange { p, n: total });
    }
    let dim = binomial(total as i64, p as i64);
    let e2 = eta * eta;
    let mult = if e2 == T::zero() {
        0
    } else {
        binomial(n as i64, p as i64 - 1)
    };
    let mut values = vec![T::zero(); dim - mult];
    values.extend(std::iter::repeat_n(e2, mult));
    SpectrumReport::from_eigenvalues(values, dim - mult)
}

/// `max |predicted − computed|` for `nil_algebra(b)` in degree `p`.
pub fn verify_spectrum<T: Real>(p: usize, b: &[T]) -> Result<T> {
    let predicted = predict_spectrum(b.len(), p, vertical_norm(b))?;
    let computed = spectrum(&nil_algebra(b), p)?;
    predicted
        .max_abs_diff(&computed)
        .ok_or_else(|| Error::DimensionMismatch("spectra of different sizes".into()))
}

/// Closed/coclosed decomposition of the `η²`-eigenspace, next to the predicted
/// counts `C(n−1, p−2)` and `C(n−1, p−1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitCheck {
    pub computed: EigenspaceSplit,
    pub expected_closed: usize,
    pub expected_coclosed: usize,
}

impl SplitCheck {
    pub fn holds(&self) -> bool {
        self.computed.closed == self.expected_closed
            && self.computed.coclosed == self.expected_coclosed
            && self.computed.eigenspace == self.expected_closed + self.expected_coclosed
    }
}

pub fn eigenspace_split_check<T: Real>(p: usize, b: &[T]) -> Result<SplitCheck> {
    let n = b.len() as i64;
    let eta = vertical_norm(b);
    let tol = lit::<T>(1e-8) * (T::one() + eta * eta);
    let computed = eigenspace_split(&nil_algebra(b), p, eta * eta, tol)?;
    Ok(SplitCheck {
        computed,
        expected_closed: binomial(n - 1, p as i64 - 2),
        expected_coclosed: binomial(n - 1, p as i64 - 1),
    })
}

/// The model in the frame `(V, Y₁ + Σ ξ_k V_k, Y₂ + Σ ζ_k V_k)`.
pub fn shifted_connection<T: Real>(b: &[T], xi: &[T], zeta: &[T]) -> Result<StructureConstants<T>> {
    let n = b.len();
    if xi.len() != n || zeta.len() != n {
        return Err(Error::DimensionMismatch("shift vectors must match the fiber".into()));
    }
    let mut p = DMatrix::identity(n + 2, n + 2);
    for k in 0..n {
        p[(k, n)] = xi[k];
        p[(k, n + 1)] = zeta[k];
    }
    change_frame(&nil_algebra(b), &p)
}

/// Limit of `λ(ε)` as `ε → 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LimitClass<T> {
    Vanishes,
    Positive(T),
}

impl<T: Real> fmt::Display for LimitClass<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitClass::Vanishes => f.write_str("vanishes"),
            LimitClass::Positive(v) => write!(f, "positive:{:?}", to_f64(*v)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrajectoryPoint<T> {
    pub eps: T,
    /// `Σ (ε^{α_i} b_i)²`.
    pub lambda: T,
    /// Smallest nonzero eigenvalue of `Δ¹` on the rescaled model.
    pub engine: Option<T>,
}

#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub points: Vec<TrajectoryPoint<T>>,
    pub limit: LimitClass<T>,
}

impl<T: Real> Trajectory<T> {
    /// Columns `eps, lambda, limit_class`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,lambda,limit_class\n");
        for pt in &self.points {
            writeln!(s, "{:?},{:?},{}", to_f64(pt.eps), to_f64(pt.lambda), self.limit).unwrap();
        }
        s
    }

    /// `max |λ(ε) − engine(ε)|` over the grid.
    pub fn engine_defect(&self) -> T {
        self.points.iter().fold(T::zero(), |acc, pt| {
            acc.max((pt.lambda - pt.engine.unwrap_or(T::zero())).abs())
        })
    }
}

/// Collapse along the frame `V_i^ε = ε^{−α_i} V_i`, so `b_i^ε = ε^{α_i} b_i`.
/// Exponents are exact rationals so the zero/positive dichotomy is structural.
pub fn collapse_direction<T: Real>(b0: &[T], alpha: &[Ratio<i64>], grid: &[T]) -> Result<Trajectory<T>> {
    if alpha.len() != b0.len() {
        return Err(Error::DimensionMismatch("α and b must have equal length".into()));
    }
    if alpha.iter().any(|a| a.is_negative()) {
        return Err(Error::InvalidInput("exponents must be nonnegative".into()));
    }
    let exps: Vec<T> = alpha
        .iter()
        .map(|a| lit::<T>(*a.numer() as f64) / lit::<T>(*a.denom() as f64))
        .collect();
    let mut points = Vec::with_capacity(grid.len());
    for &eps in grid {
        if !(eps > T::zero() && eps <= T::one()) {
            return Err(Error::InvalidInput("grid points must lie in (0, 1]".into()));
        }
        let b: Vec<T> = b0
            .iter()
            .zip(alpha.iter().zip(&exps))
            .map(|(&bi, (a, &e))| if a.is_zero() { bi } else { eps.powf(e) * bi })
            .collect();
        let lambda = b.iter().fold(T::zero(), |acc, &x| acc + x * x);
        let engine = spectrum(&nil_algebra(&b), 1)?.smallest_nonzero();
        points.push(TrajectoryPoint { eps, lambda, engine });
    }
    let limit_value = b0
        .iter()
        .zip(alpha)
        .filter(|(_, a)| a.is_zero())
        .fold(T::zero(), |acc, (&bi, _)| acc + bi * bi);
    let limit = if limit_value == T::zero() {
        LimitClass::Vanishes
    } else {
        LimitClass::Positive(limit_value)
    };
    Ok(Trajectory { points, limit })
}

/// Curvature of the model against `|K| ≤ ¾η²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureBoundReport<T> {
    pub max_abs: T,
    pub bound: T,
    /// `K(Y₁, Y₂)`, expected `−¾η²`.
    pub k_y1y2: T,
    /// O'Neill defect against the flat base `T²`.
    pub oneill: T,
    pub holds: bool,
}

pub fn curvature_bound_check<T: Real>(b: &[T]) -> Result<CurvatureBoundReport<T>> {
    let n = b.len();
    let l = nil_algebra(b);
    let table = curvature_table(&l);
    let eta = vertical_norm(b);
    let bound = lit::<T>(0.75) * eta * eta;
    let split = FrameSplit::new(n + 2, (0..n).collect())?;
    let base = curvature_table(&quotient_algebra(&l, &split)?);
    let oneill = oneill_defect(&l, &split, &base)?;
    let max_abs = table.max_abs();
    let tol = lit::<T>(1e-12) * (T::one() + bound);
    Ok(CurvatureBoundReport {
        max_abs,
        bound,
        k_y1y2: table.get(n, n + 1),
        oneill,
        holds: max_abs <= bound + tol && (table.get(n, n + 1) + bound).abs() <= tol,
    })
}

/// Invariant `p`-spectrum of a product of two bundle models.
#[derive(Clone, Debug)]
pub struct ProductSpectrum<T> {
    /// `{λ + μ}` over `λ ∈ spec^q(M₁)`, `μ ∈ spec^{p−q}(M₂)`.
    pub kunneth: SpectrumReport<T>,
    /// Direct eigensolve on `𝔤₁ ⊕ 𝔤₂`.
    pub direct: SpectrumReport<T>,
    pub max_diff: T,
}

pub fn product_bundle_spectrum<T: Real>(b1: &[T], b2: &[T], p: usize) -> Result<ProductSpectrum<T>> {
    let (l1, l2) = (nil_algebra(b1), nil_algebra(b2));
    let (n1, n2) = (l1.dim(), l2.dim());
    if p > n1 + n2 {
        return Err(Error::DegreeOutOfRange { p, n: n1 + n2 });
    }
    let mut values = Vec::new();
    let mut kernel = 0;
    for q in p.saturating_sub(n2)..=p.min(n1) {
        let s1 = spectrum(&l1, q)?;
        let s2 = spectrum(&l2, p - q)?;
        kernel += s1.kernel_dim * s2.kernel_dim;
        for &x in &s1.eigenvalues {
            for &y in &s2.eigenvalues {
                values.push(x + y);
            }
        }
    }
    let kunneth = SpectrumReport::from_eigenvalues(values, kernel)?;
    let direct = spectrum(&direct_sum(&l1, &l2), p)?;
    let max_diff = kunneth
        .max_abs_diff(&direct)
        .ok_or_else(|| Error::DimensionMismatch("product spectra differ in size".into()))?;
    Ok(ProductSpectrum {
        kunneth,
        direct,
        max_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::nil_bundle_curvature_closed_form;
    use crate::lie::{d_squared_defect, jacobi_defect};

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn reduction() {
        let r = reduce(&big(&[3, 6])).unwrap();
        assert_eq!(r.d, BigInt::from(3));
        assert_eq!(r.to_string(), "M ≅ N_3 × T^1");
        assert_eq!(r.p.determinant().abs(), BigInt::from(1));
        let r = reduce(&big(&[1, 0, 0])).unwrap();
        assert_eq!(r.p, IntegerMatrix::identity(3));
        assert_eq!(reduce(&big(&[1])).unwrap().to_string(), "M ≅ N_1");
        assert!(matches!(reduce(&big(&[0, 0])), Err(Error::TrivialBundle)));
        let r = reduce(&big(&[-4, 6, 10])).unwrap();
        assert_eq!(r.d, BigInt::from(2));
    }

    #[test]
    fn bundle_eigenvalue_scales_with_base() {
        let m = TorusBundleOverT2::new(big(&[2, 0]), 2.0).unwrap();
        assert_eq!(m.eigenvalue(1.0), 0.25);
        assert_eq!(m.reduction().d, BigInt::from(2));
        assert!(TorusBundleOverT2::new(big(&[1]), 0.0).is_err());
    }

    #[test]
    fn nil_model() {
        assert!(nil_algebra(&[0.0, 0.0]).is_abelian());
        let l = nil_algebra(&[0.6, 0.8]);
        assert_eq!(jacobi_defect(&l), 0.0);
        assert_eq!(l.get(2, 3, 0), 0.6);
        assert_eq!(l.get(3, 2, 1), -0.8);
        let s1 = spectrum(&l, 1).unwrap();
        let s2 = spectrum(&nil_algebra(&[1.0, 0.0]), 1).unwrap();
        assert!(s1.max_abs_diff(&s2).unwrap() < 1e-12);
        for p in 0..4 {
            assert!(d_squared_defect(&l, p).unwrap() < 1e-14);
        }
    }

    #[test]
    fn predicted_spectra() {
        let s = predict_spectrum(2, 1, 1.0).unwrap();
        assert_eq!(s.eigenvalues, vec![0.0, 0.0, 0.0, 1.0]);
        let s = predict_spectrum(2, 2, 1.0).unwrap();
        assert_eq!(s.eigenvalues, vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        assert!(predict_spectrum(2, 2, 0.0).unwrap().nonzero().is_empty());
        assert!(verify_spectrum(1, &[1.0, 0.0]).unwrap() <= 1e-12);
        assert!(verify_spectrum(0, &[1.0, 0.0]).unwrap() <= 1e-12);
        assert!(verify_spectrum(2, &[0.0, 0.0, 2.0]).unwrap() <= 1e-12);
        let s = spectrum(&nil_algebra(&[0.0, 0.0, 2.0]), 2).unwrap();
        assert_eq!(s.nonzero().len(), 3);
        assert!((s.nonzero()[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn all_degrees_and_splits() {
        for b in [vec![1.0], vec![0.3, -1.2], vec![0.5, 0.25, 2.0]] {
            let n = b.len();
            for p in 1..=n + 1 {
                assert!(verify_spectrum(p, &b).unwrap() <= 1e-10, "b={b:?} p={p}");
                assert!(eigenspace_split_check(p, &b).unwrap().holds(), "b={b:?} p={p}");
            }
        }
    }

    #[test]
    fn connection_shift_keeps_bracket() {
        let b = [0.7, -0.2];
        let shifted = shifted_connection(&b, &[0.3, 1.1], &[-2.0, 0.5]).unwrap();
        let base = nil_algebra(&b);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    assert!((shifted.get(i, j, k) - base.get(i, j, k)).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn collapse_directions() {
        let one = Ratio::from_integer(1);
        let zero = Ratio::from_integer(0);
        let grid = [0.5, 0.1, 0.01];
        let t = collapse_direction(&[1.0, 1.0], &[one, one], &grid).unwrap();
        assert_eq!(t.limit, LimitClass::Vanishes);
        for pt in &t.points {
            assert!((pt.lambda - 2.0 * pt.eps * pt.eps).abs() < 1e-15);
        }
        assert!(t.engine_defect() < 1e-12);
        let b2: f64 = 2f64.sqrt();
        let t = collapse_direction(&[3f64.sqrt(), b2], &[one, zero], &grid).unwrap();
        assert_eq!(t.limit, LimitClass::Positive(b2 * b2));
        let t = collapse_direction(&[1.0, 2.0], &[zero, zero], &grid).unwrap();
        assert!(t.points.iter().all(|pt| pt.lambda == 5.0));
        assert!(t.to_csv().starts_with("eps,lambda,limit_class\n0.5,5.0,positive:5.0\n"));
        assert!(collapse_direction(&[1.0], &[Ratio::new(-1, 2)], &grid).is_err());
    }

    #[test]
    fn curvature_bounds() {
        let r = curvature_bound_check(&[1.0, 0.0]).unwrap();
        assert_eq!(r.max_abs, 0.75);
        assert!(r.holds && r.oneill <= 1e-12);
        let r = curvature_bound_check(&[2.0, 0.0]).unwrap();
        assert!((r.max_abs - 3.0).abs() < 1e-12 && r.holds);
        let r = curvature_bound_check(&[0.0, 0.0]).unwrap();
        assert_eq!(r.max_abs, 0.0);
        let table = curvature_table(&nil_algebra(&[1.5, 0.0, 0.0]));
        assert!(table.max_abs_diff(&nil_bundle_curvature_closed_form(3, 1.5)) < 1e-12);
    }

    #[test]
    fn product_spectra() {
        let ps = product_bundle_spectrum(&[1.0], &[2.0], 1).unwrap();
        assert_eq!(ps.kunneth.nonzero(), &[1.0, 4.0]);
        assert!(ps.max_diff <= 1e-12);
        let ps = product_bundle_spectrum(&[1.0, 0.5], &[0.0], 2).unwrap();
        assert!(ps.max_diff <= 1e-12);
        let single = spectrum(&nil_algebra(&[1.0, 0.5]), 1).unwrap();
        assert!(ps.kunneth.nonzero().iter().all(|v| single.nonzero().iter().any(|w| (v - w).abs() < 1e-12)));
    }
}
