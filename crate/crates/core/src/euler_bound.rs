//! The Euler map `e: 𝒢* → ℋ²(N)` of a torus bundle and the lower bound
//! `λ₁(e*e) ≥ (Det e)² / ‖e‖^{2k−2}`.
//!
//! `E` has one column per lattice basis vector of `𝒢*` and one row per
//! vector of an orthonormal basis of `ℋ²(N)`. `gram` is the metric on `𝒢*`
//! in the lattice basis, so `Vol(Tᵏ) = 1/√det(gram)`.

use std::fmt::Write as _;

use nalgebra::{Cholesky, DMatrix, Dyn};
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::flat_torus::{shortest_vector, FlatTorus};
use crate::intlat::{rational_rank, smith_normal_form, IntegerMatrix};
use crate::lie::{numerical_rank, FormBasis, SpectrumReport};
use crate::scalar::{lit, to_f64, Real};
use crate::torus_bundle::collapse_direction;

#[derive(Clone, Debug)]
pub struct EulerMap<T: Real> {
    e: DMatrix<T>,
    gram: DMatrix<T>,
    chol: Cholesky<T, Dyn>,
}

impl<T: Real> EulerMap<T> {
    pub fn new(e: DMatrix<T>, gram: DMatrix<T>) -> Result<Self> {
        if !gram.is_square() || gram.nrows() != e.ncols() {
            return Err(Error::DimensionMismatch("gram must be k×k for k columns of E".into()));
        }
        let chol = Cholesky::new(gram.clone()).ok_or(Error::NotPositiveDefinite)?;
        Ok(Self { e, gram, chol })
    }

    /// Obstruction class `a` of a bundle over a unit-area `T²` with a unit square fiber.
    pub fn from_obstruction(a: &[i64]) -> Self {
        let e = DMatrix::from_fn(1, a.len(), |_, j| lit::<T>(a[j] as f64));
        Self::new(e, DMatrix::identity(a.len(), a.len())).expect("identity gram")
    }

    pub fn k(&self) -> usize {
        self.e.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.e
    }

    pub fn gram(&self) -> &DMatrix<T> {
        &self.gram
    }

    /// `1/√det(gram)`.
    pub fn fiber_volume(&self) -> T {
        T::one() / self.gram.determinant().sqrt()
    }

    /// `E·L⁻ᵀ` with `gram = L·Lᵀ`: the matrix of `e` in an orthonormal frame of `𝒢*`.
    pub fn orthonormal_matrix(&self) -> DMatrix<T> {
        let l = self.chol.l();
        let lt_inv = l
            .transpose()
            .solve_upper_triangular(&DMatrix::identity(self.k(), self.k()))
            .expect("Cholesky factor is invertible");
        &self.e * lt_inv
    }

    /// Operator norm `‖e‖`.
    pub fn norm(&self) -> T {
        largest_singular_value(&self.orthonormal_matrix())
    }

    pub fn rank(&self) -> usize {
        match IntegerMatrix::from_real(&self.e) {
            Some(m) => rational_rank(&m),
            None => numerical_rank(&self.orthonormal_matrix()),
        }
    }
}

fn largest_singular_value<T: Real>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(T::zero(), |a, &b| a.max(b))
}

/// Matrix of `e*e` in the orthonormal frame of `𝒢*`.
pub fn ee_star<T: Real>(map: &EulerMap<T>) -> DMatrix<T> {
    let m = map.orthonormal_matrix();
    m.transpose() * m
}

/// `λ_min(e*e) ≥ Det(e*e)/‖e*e‖^{k−1} ≥ (Det e)²/‖e‖^{2k−2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundChain<T> {
    pub lambda_min: T,
    pub middle: T,
    pub det_bound: T,
    pub norm: T,
    pub det_e: T,
}

impl<T: Real> BoundChain<T> {
    /// Both inequalities within `1e−10` relative to `λ_min`.
    pub fn holds(&self) -> bool {
        let tol = lit::<T>(1e-10) * (T::one() + self.lambda_min);
        self.lambda_min >= self.middle - tol && self.middle >= self.det_bound - tol
    }

    pub fn margin(&self) -> T {
        self.lambda_min - self.det_bound
    }

    fn from_matrix(a: &DMatrix<T>) -> Self {
        let k = a.ncols();
        let ata = a.transpose() * a;
        let lambda_min = if k == 0 {
            T::zero()
        } else {
            ata.clone().symmetric_eigenvalues().min()
        };
        let det_ata = ata.determinant().max(T::zero());
        let norm = largest_singular_value(a);
        let power = k.saturating_sub(1) as i32;
        let det_e = det_ata.sqrt();
        Self {
            lambda_min,
            middle: det_ata / (norm * norm).powi(power),
            det_bound: det_e * det_e / norm.powi(2 * power),
            norm,
            det_e,
        }
    }
}

pub fn bound_chain<T: Real>(map: &EulerMap<T>) -> Result<BoundChain<T>> {
    let rank = map.rank();
    if rank < map.k() {
        return Err(Error::NotInjective { rank, k: map.k() });
    }
    Ok(BoundChain::from_matrix(&map.orthonormal_matrix()))
}

/// `Det e = Det′e · Vol(Tᵏ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetFactorization<T> {
    /// `√det(EᵀE)`: the lattice basis against an orthonormal basis of `Im e`.
    pub det_prime: T,
    pub fiber_volume: T,
    /// From the orthonormal frame of `𝒢*`.
    pub det_e: T,
    /// `|Det e − Det′e·Vol| / Det e`.
    pub relative_defect: T,
}

pub fn det_factorization<T: Real>(map: &EulerMap<T>) -> Result<DetFactorization<T>> {
    let rank = map.rank();
    if rank < map.k() {
        return Err(Error::NotInjective { rank, k: map.k() });
    }
    let e = map.matrix();
    let det_prime = (e.transpose() * e).determinant().sqrt();
    let fiber_volume = map.fiber_volume();
    let det_e = BoundChain::from_matrix(&map.orthonormal_matrix()).det_e;
    Ok(DetFactorization {
        det_prime,
        fiber_volume,
        det_e,
        relative_defect: (det_e - det_prime * fiber_volume).abs() / det_e,
    })
}

/// Reduction of a non-injective Euler map to `(ker e)^⊥`.
#[derive(Clone, Debug)]
pub struct NoninjectiveReport<T> {
    /// Columns: lattice basis of `ker e`.
    pub kernel: IntegerMatrix,
    /// Columns: lattice vectors completing `kernel` to a lattice basis.
    pub complement: IntegerMatrix,
    /// `E` on the complement: the Euler data of the quotient bundle.
    pub quotient_euler: IntegerMatrix,
    /// `Vol(Tᵏ/T^{k−l}) = 1/Det P₁`.
    pub quotient_volume: T,
    /// `Det A′·Det P₁/Det P`.
    pub det_a: T,
    /// Bound chain of `A`, the orthonormal-frame matrix of `e` on `(ker e)^⊥`.
    pub chain: Option<BoundChain<T>>,
    /// Smallest nonzero eigenvalue of `e*e` from a direct eigensolve.
    pub lambda1_direct: Option<T>,
}

impl<T: Real> NoninjectiveReport<T> {
    /// `E = 0`: every fiber direction is trivial and no bound applies.
    pub fn is_trivial(&self) -> bool {
        self.chain.is_none()
    }
}

/// Integral `E` only: the kernel must be spanned by lattice vectors.
pub fn noninjective_reduce<T: Real>(map: &EulerMap<T>) -> Result<NoninjectiveReport<T>> {
    let ie = IntegerMatrix::from_real(map.matrix())
        .ok_or_else(|| Error::InvalidInput("E must be integral".into()))?;
    let k = map.k();
    let snf = smith_normal_form(&ie);
    let r = snf.rank();
    let l = k - r;
    // lattice basis B′ = [kernel | complement]
    let kernel = IntegerMatrix::from_fn(k, l, |i, j| snf.v[(i, r + j)].clone());
    let complement = IntegerMatrix::from_fn(k, r, |i, j| snf.v[(i, j)].clone());
    let ordered = IntegerMatrix::from_fn(k, k, |i, j| {
        if j < l {
            kernel[(i, j)].clone()
        } else {
            complement[(i, j - l)].clone()
        }
    });
    let quotient_euler = ie.mul(&complement);
    let g = map.gram();
    let v: DMatrix<T> = ordered.to_real();
    // P upper triangular: Vᵀ G V = Pᵀ P
    let p = Cholesky::new(v.transpose() * g * &v)
        .ok_or(Error::NotPositiveDefinite)?
        .l()
        .transpose();
    let det_p1 = (0..l).fold(T::one(), |acc, i| acc * p[(i, i)]);
    let det_p = (0..k).fold(T::one(), |acc, i| acc * p[(i, i)]);
    let quotient_volume = T::one() / det_p1;
    if r == 0 {
        return Ok(NoninjectiveReport {
            kernel,
            complement,
            quotient_euler,
            quotient_volume,
            det_a: T::zero(),
            chain: None,
            lambda1_direct: None,
        });
    }
    let ew: DMatrix<T> = quotient_euler.to_real();
    let det_a_prime = (ew.transpose() * &ew).determinant().sqrt();
    let det_a = det_a_prime * det_p1 / det_p;
    // A = A′·P₃⁻¹ with A′ = EW in an orthonormal basis of Im e
    let p3 = p.view((l, l), (r, r)).into_owned();
    let p3_inv = p3
        .solve_upper_triangular(&DMatrix::identity(r, r))
        .ok_or(Error::SingularFrame { ratio: 0.0 })?;
    let a = ew * p3_inv;
    let chain = BoundChain::from_matrix(&a);
    let ee = SpectrumReport::from_eigenvalues(
        ee_star(map).symmetric_eigenvalues().iter().copied().collect(),
        l,
    )?;
    Ok(NoninjectiveReport {
        kernel,
        complement,
        quotient_euler,
        quotient_volume,
        det_a,
        chain: Some(chain),
        lambda1_direct: ee.smallest_nonzero(),
    })
}

/// Minimal `L²` norm of a nonzero integral harmonic 2-form on a flat torus.
#[derive(Clone, Debug, PartialEq)]
pub struct RhoReport<T> {
    pub rho: T,
    /// Coefficients on `dx_i ∧ dx_j`, `i < j` lexicographic.
    pub class: Vec<i64>,
}

/// Gram of constant 2-forms: `⟨dx_i∧dx_j, dx_k∧dx_l⟩ = g^{ik}g^{jl} − g^{il}g^{jk}`.
pub fn two_form_gram<T: Real>(n: &FlatTorus<T>) -> Result<DMatrix<T>> {
    let m = n.dim();
    let inv = n
        .gram()
        .clone()
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite)?;
    let basis = FormBasis::new(m, 2)?;
    Ok(DMatrix::from_fn(basis.len(), basis.len(), |a, b| {
        let (i, j) = (basis.tuple(a)[0], basis.tuple(a)[1]);
        let (k, l) = (basis.tuple(b)[0], basis.tuple(b)[1]);
        inv[(i, k)] * inv[(j, l)] - inv[(i, l)] * inv[(j, k)]
    }))
}

/// `ρ = min ‖α‖₂` with `‖α‖₂² = vol · cᵀQc`; `radius` overrides the enumeration box.
pub fn rho_flat<T: Real>(n: &FlatTorus<T>, radius: Option<i64>) -> Result<RhoReport<T>> {
    let m = n.dim();
    if !(2..=4).contains(&m) {
        return Err(Error::InvalidInput("ρ needs 2 ≤ dim N ≤ 4".into()));
    }
    let q = two_form_gram(n)? * n.volume();
    let (min, class) = shortest_vector(&q, radius);
    Ok(RhoReport {
        rho: min.sqrt(),
        class,
    })
}

/// One grid point of a fiber-collapse experiment.
#[derive(Clone, Debug)]
pub struct VolBoundRow<T> {
    pub eps: T,
    /// `η(ε)²`.
    pub lambda: T,
    /// Smallest nonzero `Δ¹` eigenvalue of the rescaled model.
    pub engine: Option<T>,
    pub fiber_volume: T,
    /// `λ / Vol²`.
    pub ratio: T,
}

#[derive(Clone, Debug)]
pub struct VolBoundReport<T> {
    pub rows: Vec<VolBoundRow<T>>,
    pub min_ratio: T,
    /// The ratio never drops below its value at the first grid point.
    pub bounded_below: bool,
}

impl<T: Real> VolBoundReport<T> {
    /// Columns `eps, lambda, vol, ratio`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,lambda,vol,ratio\n");
        for r in &self.rows {
            writeln!(
                s,
                "{:?},{:?},{:?},{:?}",
                to_f64(r.eps),
                to_f64(r.lambda),
                to_f64(r.fiber_volume),
                to_f64(r.ratio)
            )
            .unwrap();
        }
        s
    }
}

/// Bundle with obstruction `a` over a unit-area `T²`. The fiber frame
/// `V_i^ε = ε^{−α_i}V_i` is orthonormal, where the columns of `frame` give
/// `V_i` in lattice coordinates; `[Y₁, Y₂] = Σ a_i X_i`.
pub fn vol_bound_experiment<T: Real>(
    a: &[i64],
    frame: &DMatrix<T>,
    alpha: &[Ratio<i64>],
    grid: &[T],
) -> Result<VolBoundReport<T>> {
    let n = a.len();
    if a.iter().all(|&x| x == 0) {
        return Err(Error::TrivialBundle);
    }
    if frame.shape() != (n, n) {
        return Err(Error::DimensionMismatch("frame must be n×n".into()));
    }
    let inv = frame.clone().try_inverse().ok_or(Error::SingularFrame { ratio: 0.0 })?;
    let av = nalgebra::DVector::from_iterator(n, a.iter().map(|&x| lit::<T>(x as f64)));
    let b: Vec<T> = (&inv * av).iter().copied().collect();
    let vol0 = inv.determinant().abs();
    let exps: Vec<T> = alpha
        .iter()
        .map(|r| lit::<T>(*r.numer() as f64) / lit::<T>(*r.denom() as f64))
        .collect();
    let traj = collapse_direction(&b, alpha, grid)?;
    let rows: Vec<VolBoundRow<T>> = traj
        .points
        .iter()
        .map(|pt| {
            let vol = exps.iter().fold(vol0, |acc, &e| acc * pt.eps.powf(e));
            VolBoundRow {
                eps: pt.eps,
                lambda: pt.lambda,
                engine: pt.engine,
                fiber_volume: vol,
                ratio: pt.lambda / (vol * vol),
            }
        })
        .collect();
    let min_ratio = rows.iter().map(|r| r.ratio).reduce(|a, b| a.min(b)).unwrap_or(T::zero());
    let first = rows.first().map_or(T::zero(), |r| r.ratio);
    Ok(VolBoundReport {
        bounded_below: min_ratio >= first * (T::one() - lit::<T>(1e-9)),
        rows,
        min_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn m(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn ee_star_cases() {
        let z = EulerMap::new(DMatrix::<f64>::zeros(2, 2), DMatrix::identity(2, 2)).unwrap();
        assert_eq!(ee_star(&z), DMatrix::zeros(2, 2));
        let s = EulerMap::new(m(1, 1, &[2.0]), m(1, 1, &[1.0])).unwrap();
        assert_eq!(ee_star(&s)[(0, 0)], 4.0);
        let e = m(3, 3, &[1.0, -2.0, 0.0, 3.0, 1.0, 1.0, 0.0, 4.0, -1.0]);
        let id = EulerMap::new(e.clone(), DMatrix::identity(3, 3)).unwrap();
        assert!((ee_star(&id) - e.transpose() * &e).amax() < 1e-12);
        assert!(EulerMap::new(e, DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn chains() {
        let c = bound_chain(&EulerMap::new(m(1, 1, &[5.0]), m(1, 1, &[2.0])).unwrap()).unwrap();
        assert!((c.lambda_min - c.det_bound).abs() < 1e-12);
        let c = bound_chain(&EulerMap::new(m(2, 2, &[1.0, 0.0, 0.0, 3.0]), DMatrix::identity(2, 2)).unwrap()).unwrap();
        assert!((c.lambda_min - 1.0).abs() < 1e-12 && (c.det_bound - 1.0).abs() < 1e-12);
        assert!(c.holds());
        let bad = EulerMap::new(m(2, 2, &[1.0, 2.0, 2.0, 4.0]), DMatrix::identity(2, 2)).unwrap();
        assert!(matches!(bound_chain(&bad), Err(Error::NotInjective { rank: 1, k: 2 })));
    }

    #[test]
    fn det_factorizations() {
        let id = EulerMap::new(DMatrix::<f64>::identity(2, 2), DMatrix::identity(2, 2)).unwrap();
        let f = det_factorization(&id).unwrap();
        assert_eq!((f.det_prime, f.fiber_volume, f.det_e), (1.0, 1.0, 1.0));
        let sq = EulerMap::new(DMatrix::<f64>::identity(2, 2), m(2, 2, &[4.0, 0.0, 0.0, 4.0])).unwrap();
        let f = det_factorization(&sq).unwrap();
        assert_eq!(f.fiber_volume, 0.25);
        assert!((f.det_e - 0.25).abs() < 1e-14 && f.relative_defect < 1e-12);
        let g = m(3, 3, &[2.0, 0.3, -0.1, 0.3, 1.0, 0.2, -0.1, 0.2, 0.7]);
        let e = m(4, 3, &[1.0, 0.0, 2.0, -1.0, 3.0, 0.0, 0.0, 1.0, 1.0, 2.0, 2.0, -3.0]);
        let f = det_factorization(&EulerMap::new(e, g).unwrap()).unwrap();
        assert!(f.relative_defect < 1e-10);
    }

    #[test]
    fn noninjective_blocks() {
        let e_prime = m(2, 2, &[2.0, 1.0, -1.0, 3.0]);
        let g_prime = m(2, 2, &[1.5, 0.2, 0.2, 0.8]);
        let mut e = DMatrix::zeros(2, 3);
        e.view_mut((0, 1), (2, 2)).copy_from(&e_prime);
        let mut g = DMatrix::zeros(3, 3);
        g[(0, 0)] = 0.6;
        g.view_mut((1, 1), (2, 2)).copy_from(&g_prime);
        let rep = noninjective_reduce(&EulerMap::new(e, g).unwrap()).unwrap();
        let direct = bound_chain(&EulerMap::new(e_prime, g_prime).unwrap()).unwrap();
        let chain = rep.chain.unwrap();
        assert!((chain.lambda_min - direct.lambda_min).abs() < 1e-12);
        assert!((chain.det_bound - direct.det_bound).abs() < 1e-12);
        assert!((rep.det_a - direct.det_e).abs() < 1e-12);
        assert!((rep.lambda1_direct.unwrap() - direct.lambda_min).abs() < 1e-12);
        assert!((rep.quotient_volume - 1.0 / 0.6f64.sqrt()).abs() < 1e-12);
        assert_eq!(rep.kernel.ncols(), 1);
    }

    #[test]
    fn noninjective_trivial_and_bundle() {
        let z = EulerMap::new(DMatrix::<f64>::zeros(1, 2), DMatrix::identity(2, 2)).unwrap();
        assert!(noninjective_reduce(&z).unwrap().is_trivial());
        let rep = noninjective_reduce(&EulerMap::<f64>::from_obstruction(&[3, 6])).unwrap();
        assert_eq!(rep.kernel.ncols(), 1);
        assert_eq!(rep.quotient_euler[(0, 0)].magnitude(), &3u32.into());
        let chain = rep.chain.unwrap();
        assert!((chain.lambda_min - rep.lambda1_direct.unwrap()).abs() < 1e-12);
        assert!(chain.holds());
    }

    #[test]
    fn rho_values() {
        let r = rho_flat(&FlatTorus::<f64>::identity(2), None).unwrap();
        assert_eq!(r.rho, 1.0);
        let s: f64 = 1.7;
        let t = FlatTorus::new(DMatrix::from_diagonal(&DVector::from_vec(vec![s * s, 1.0 / (s * s)]))).unwrap();
        assert!((rho_flat(&t, None).unwrap().rho - 1.0).abs() < 1e-12);
        assert_eq!(rho_flat(&FlatTorus::<f64>::identity(3), None).unwrap().rho, 1.0);
        let g = FlatTorus::new(m(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.3, 0.0, 0.3, 1.5])).unwrap();
        let base = rho_flat(&g, None).unwrap().rho;
        assert_eq!(rho_flat(&g, Some(6)).unwrap().rho, base);
        assert!(rho_flat(&FlatTorus::<f64>::identity(1), None).is_err());
    }

    #[test]
    fn vol_bound() {
        let grid: [f64; 4] = [1.0, 0.5, 0.1, 0.01];
        let one = Ratio::from_integer(1);
        let zero = Ratio::from_integer(0);
        let r = vol_bound_experiment(&[1], &DMatrix::identity(1, 1), &[one], &grid).unwrap();
        assert!(r.rows.iter().all(|row| (row.ratio - 1.0).abs() < 1e-12));
        assert!(r.bounded_below);
        let r = vol_bound_experiment(&[1, 0], &DMatrix::identity(2, 2), &[one, one], &grid).unwrap();
        assert!((r.rows[3].ratio - 1e4).abs() < 1e-6 && r.bounded_below);
        let s = 2f64.sqrt();
        let frame = m(2, 2, &[1.0, -s, s, 1.0]) / 3f64.sqrt();
        let r = vol_bound_experiment(&[1, 0], &frame, &[one, zero], &grid).unwrap();
        assert!(r.bounded_below);
        assert!(r.rows[3].lambda > 0.5);
        assert!(r.to_csv().starts_with("eps,lambda,vol,ratio\n1.0,"));
    }
}
