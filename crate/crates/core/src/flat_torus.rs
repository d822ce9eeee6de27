//! Flat tori `ℝᵏ/ℤᵏ` with a constant metric: exact Fourier-mode spectra,
//! covering radius, and invariance thresholds on product models.
//!
//! The eigenfunction `e^{2πi⟨γ,x⟩}`, `γ ∈ ℤᵏ`, has eigenvalue `4π²·γᵀG⁻¹γ`.

use std::fmt::Write as _;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{binomial, lit, to_f64, Real};

/// Default covering-radius grid resolution per side.
pub const DEFAULT_RESOLUTION: usize = 200;
/// Relative tolerance for grouping equal eigenvalues.
pub const GROUP_TOL: f64 = 1e-12;

/// `4π²`.
pub fn four_pi_sq<T: Real>() -> T {
    let pi = T::pi();
    lit::<T>(4.0) * pi * pi
}

#[derive(Clone, Debug)]
pub struct FlatTorus<T: Real> {
    gram: DMatrix<T>,
    inverse: DMatrix<T>,
    /// Coordinates `fiber_start..k` carry the torus action used for invariance flags.
    fiber_start: usize,
}

impl<T: Real> FlatTorus<T> {
    pub fn new(gram: DMatrix<T>) -> Result<Self> {
        if !gram.is_square() || gram.nrows() == 0 {
            return Err(Error::DimensionMismatch("gram must be square and nonempty".into()));
        }
        if (&gram - gram.transpose()).amax() > lit::<T>(1e-12) * (T::one() + gram.amax()) {
            return Err(Error::InvalidInput("gram must be symmetric".into()));
        }
        let chol = Cholesky::<T, Dyn>::new(gram.clone()).ok_or(Error::NotPositiveDefinite)?;
        let inverse = chol.inverse();
        Ok(Self {
            gram,
            inverse,
            fiber_start: 0,
        })
    }

    pub fn identity(k: usize) -> Self {
        Self::new(DMatrix::identity(k, k)).expect("identity is SPD")
    }

    /// Circle of length `l`.
    pub fn circle(l: T) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, l * l))
    }

    /// Riemannian product `base × fiber`; the fiber coordinates come last.
    pub fn product(base: &Self, fiber: &Self) -> Self {
        let (kb, kf) = (base.dim(), fiber.dim());
        let mut gram = DMatrix::zeros(kb + kf, kb + kf);
        gram.view_mut((0, 0), (kb, kb)).copy_from(&base.gram);
        gram.view_mut((kb, kb), (kf, kf)).copy_from(&fiber.gram);
        let mut t = Self::new(gram).expect("block-diagonal of SPD blocks is SPD");
        t.fiber_start = kb;
        t
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<T> {
        &self.gram
    }

    pub fn fiber_start(&self) -> usize {
        self.fiber_start
    }

    pub fn volume(&self) -> T {
        self.gram.determinant().sqrt()
    }

    /// `4π²·γᵀG⁻¹γ`.
    pub fn eigenvalue(&self, gamma: &[i64]) -> T {
        four_pi_sq::<T>() * quadratic(&self.inverse, gamma)
    }

    /// Whether `γ` vanishes on the fiber coordinates.
    pub fn is_invariant(&self, gamma: &[i64]) -> bool {
        gamma[self.fiber_start..].iter().all(|&g| g == 0)
    }
}

fn quadratic<T: Real>(m: &DMatrix<T>, v: &[i64]) -> T {
    let x = DVector::from_iterator(v.len(), v.iter().map(|&g| lit::<T>(g as f64)));
    x.dot(&(m * &x))
}

/// Box radius `⌊√(q / λ_min(M))⌋` containing every `γ` with `γᵀMγ ≤ q`.
fn box_radius<T: Real>(m: &DMatrix<T>, q: T) -> i64 {
    let lmin = m.clone().symmetric_eigenvalues().min();
    to_f64((q / lmin).sqrt()).floor() as i64
}

/// All `γ ∈ [−r, r]ᵏ`, in lexicographic order, split over the first coordinate.
fn box_points(k: usize, r: i64) -> impl ParallelIterator<Item = Vec<i64>> {
    (-r..=r).into_par_iter().flat_map_iter(move |first| {
        let side = (2 * r + 1) as usize;
        let count = side.pow(k as u32 - 1);
        (0..count).map(move |mut idx| {
            let mut g = vec![first; k];
            for slot in g[1..].iter_mut().rev() {
                *slot = (idx % side) as i64 - r;
                idx /= side;
            }
            g
        })
    })
}

/// Exact minimum of `γᵀMγ` over nonzero integer `γ`. `radius` overrides the
/// provably sufficient box; ties resolve to the lexicographically first `γ`.
pub fn shortest_vector<T: Real>(m: &DMatrix<T>, radius: Option<i64>) -> (T, Vec<i64>) {
    let k = m.nrows();
    let q0 = (1..k).map(|i| m[(i, i)]).fold(m[(0, 0)], |a, b| a.min(b));
    let r = radius.unwrap_or_else(|| box_radius(m, q0).max(1));
    box_points(k, r)
        .filter(|g| g.iter().any(|&x| x != 0))
        .map(|g| (quadratic(m, &g), g))
        .reduce_with(|a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
        .expect("box contains a nonzero vector")
}

/// `λ_{0,1}`: the first nonzero eigenvalue on functions.
pub fn lambda01<T: Real>(t: &FlatTorus<T>) -> T {
    four_pi_sq::<T>() * shortest_vector(&t.inverse, None).0
}

/// `λ_{0,1}` searched in a box of the given radius.
pub fn lambda01_in_box<T: Real>(t: &FlatTorus<T>, radius: i64) -> T {
    four_pi_sq::<T>() * shortest_vector(&t.inverse, Some(radius)).0
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mode<T> {
    pub gamma: Vec<i64>,
    pub eigenvalue: T,
    pub invariant: bool,
}

/// Eigenvalue group: distinct value, number of Fourier modes, invariant modes.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeGroup<T> {
    pub eigenvalue: T,
    pub modes: usize,
    pub invariant_modes: usize,
    /// `modes · C(k, p)`.
    pub multiplicity: usize,
}

/// All Fourier modes of `Δᵖ` with eigenvalue `≤ cutoff`; each carries `C(k, p)` forms.
#[derive(Clone, Debug)]
pub struct ModeSpectrum<T> {
    pub k: usize,
    pub p: usize,
    pub cutoff: T,
    /// Sorted by eigenvalue, then lexicographically by `γ`.
    pub modes: Vec<Mode<T>>,
}

impl<T: Real> ModeSpectrum<T> {
    pub fn form_multiplicity(&self) -> usize {
        binomial(self.k as i64, self.p as i64)
    }

    pub fn harmonic_dim(&self) -> usize {
        self.modes.iter().filter(|m| m.eigenvalue == T::zero()).count() * self.form_multiplicity()
    }

    /// Eigenvalues with multiplicity, ascending.
    pub fn values(&self) -> Vec<T> {
        let f = self.form_multiplicity();
        self.modes
            .iter()
            .flat_map(|m| std::iter::repeat_n(m.eigenvalue, f))
            .collect()
    }

    pub fn groups(&self) -> Vec<ModeGroup<T>> {
        let f = self.form_multiplicity();
        let tol = lit::<T>(GROUP_TOL);
        let mut out: Vec<ModeGroup<T>> = Vec::new();
        for m in &self.modes {
            let inv = usize::from(m.invariant);
            match out.last_mut() {
                Some(g) if (m.eigenvalue - g.eigenvalue).abs() <= tol * (T::one() + g.eigenvalue) => {
                    g.modes += 1;
                    g.invariant_modes += inv;
                    g.multiplicity += f;
                }
                _ => out.push(ModeGroup {
                    eigenvalue: m.eigenvalue,
                    modes: 1,
                    invariant_modes: inv,
                    multiplicity: f,
                }),
            }
        }
        out
    }

    /// Columns `gamma_1..gamma_k, eigenvalue, multiplicity, invariant_flag`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for i in 1..=self.k {
            write!(s, "gamma_{i},").unwrap();
        }
        s.push_str("eigenvalue,multiplicity,invariant_flag\n");
        let f = self.form_multiplicity();
        for m in &self.modes {
            for g in &m.gamma {
                write!(s, "{g},").unwrap();
            }
            writeln!(s, "{:?},{f},{}", to_f64(m.eigenvalue), u8::from(m.invariant)).unwrap();
        }
        s
    }
}

pub fn p_form_spectrum<T: Real>(t: &FlatTorus<T>, p: usize, cutoff: T) -> Result<ModeSpectrum<T>> {
    let k = t.dim();
    if p > k {
        return Err(Error::DegreeOutOfRange { p, n: k });
    }
    if cutoff < T::zero() {
        return Err(Error::InvalidInput("cutoff must be nonnegative".into()));
    }
    let q = cutoff / four_pi_sq::<T>();
    let r = box_radius(&t.inverse, q);
    let mut modes: Vec<Mode<T>> = box_points(k, r)
        .filter_map(|g| {
            let ev = t.eigenvalue(&g);
            (ev <= cutoff).then(|| Mode {
                invariant: t.is_invariant(&g),
                gamma: g,
                eigenvalue: ev,
            })
        })
        .collect();
    modes.sort_by(|a, b| {
        a.eigenvalue
            .partial_cmp(&b.eigenvalue)
            .unwrap()
            .then_with(|| a.gamma.cmp(&b.gamma))
    });
    Ok(ModeSpectrum {
        k,
        p,
        cutoff,
        modes,
    })
}

/// Covering radius from a grid, with `value ≤ true ≤ value + error`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diameter<T> {
    pub value: T,
    pub error: T,
}

/// Covering radius of the lattice `ℤᵏ` under `G`, sampled on the grid
/// `{i/resolution}ᵏ` of the fundamental domain.
pub fn diameter<T: Real>(t: &FlatTorus<T>, resolution: usize) -> Result<Diameter<T>> {
    let k = t.dim();
    if k > 3 {
        return Err(Error::InvalidInput("covering radius supports k ≤ 3".into()));
    }
    if resolution == 0 {
        return Err(Error::InvalidInput("resolution must be positive".into()));
    }
    let h = T::one() / T::from_usize(resolution).unwrap();
    let inv_diag: Vec<T> = (0..k).map(|i| t.inverse[(i, i)].sqrt()).collect();
    let total = resolution.pow(k as u32);
    let value = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut x = vec![T::zero(); k];
            for xi in x.iter_mut().rev() {
                *xi = T::from_usize(idx % resolution).unwrap() * h;
                idx /= resolution;
            }
            distance_to_lattice(&t.gram, &x, &inv_diag)
        })
        .reduce(T::zero, |a, b| a.max(b));
    let mut worst = T::zero();
    for signs in 0..(1usize << k) {
        let s = DVector::from_fn(k, |i, _| if signs >> i & 1 == 1 { T::one() } else { -T::one() });
        worst = worst.max(s.dot(&(&t.gram * &s)));
    }
    Ok(Diameter {
        value,
        error: h / lit::<T>(2.0) * worst.sqrt(),
    })
}

/// `min_v |x − v|_G` over `v ∈ ℤᵏ`, searching only where `|x_i − v_i| ≤ d₀·√(G⁻¹)_ii`.
fn distance_to_lattice<T: Real>(g: &DMatrix<T>, x: &[T], inv_diag: &[T]) -> T {
    let k = x.len();
    let norm = |v: &[i64]| {
        let d = DVector::from_fn(k, |i, _| x[i] - lit::<T>(v[i] as f64));
        d.dot(&(g * &d))
    };
    let rounded: Vec<i64> = x.iter().map(|&xi| to_f64(xi).round() as i64).collect();
    let mut best = norm(&rounded);
    let bound = best.sqrt();
    let ranges: Vec<(i64, i64)> = (0..k)
        .map(|i| {
            let w = bound * inv_diag[i];
            (to_f64((x[i] - w).ceil()) as i64, to_f64((x[i] + w).floor()) as i64)
        })
        .collect();
    let mut v: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        best = best.min(norm(&v));
        let mut i = 0;
        loop {
            if i == k {
                return best.sqrt();
            }
            if v[i] < ranges[i].1 {
                v[i] += 1;
                break;
            }
            v[i] = ranges[i].0;
            i += 1;
        }
    }
}

/// `g_t = (dx + t dy)² + dy²`.
pub fn gt_gram<T: Real>(t: T) -> FlatTorus<T> {
    let g = DMatrix::from_row_slice(2, 2, &[T::one(), t, t, T::one() + t * t]);
    FlatTorus::new(g).expect("g_t is SPD")
}

/// Checks on a product `base × fiber`: eigenvalues below `λ_{0,1}(fiber)`
/// only have fiber-invariant modes, and the first non-invariant eigenvalue
/// equals `λ_{0,1}(fiber)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdReport<T> {
    pub threshold: T,
    /// Non-invariant modes strictly below the threshold.
    pub violations: usize,
    pub first_non_invariant: Option<T>,
    pub attained: bool,
}

impl<T: Real> ThresholdReport<T> {
    pub fn holds(&self) -> bool {
        self.violations == 0 && self.attained
    }
}

pub fn threshold_check_product<T: Real>(
    base: &FlatTorus<T>,
    fiber: &FlatTorus<T>,
    p: usize,
    cutoff: T,
) -> Result<ThresholdReport<T>> {
    let threshold = lambda01(fiber);
    if cutoff < threshold {
        return Err(Error::InvalidInput("cutoff must reach λ_{0,1} of the fiber".into()));
    }
    let product = FlatTorus::product(base, fiber);
    let spec = p_form_spectrum(&product, p, cutoff)?;
    let violations = spec
        .modes
        .iter()
        .filter(|m| !m.invariant && m.eigenvalue < threshold)
        .count();
    let first_non_invariant = spec.modes.iter().find(|m| !m.invariant).map(|m| m.eigenvalue);
    let tol = lit::<T>(GROUP_TOL) * threshold;
    Ok(ThresholdReport {
        threshold,
        violations,
        first_non_invariant,
        attained: first_non_invariant.is_some_and(|v| (v - threshold).abs() <= tol),
    })
}

/// Every eigenvalue group of odd total multiplicity must contain a
/// fiber-invariant mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OddMultiplicityReport {
    pub odd_groups: usize,
    pub violations: usize,
}

pub fn odd_multiplicity_check<T: Real>(t: &FlatTorus<T>, p: usize, cutoff: T) -> Result<OddMultiplicityReport> {
    let groups = p_form_spectrum(t, p, cutoff)?.groups();
    let odd: Vec<_> = groups.iter().filter(|g| g.multiplicity % 2 == 1).collect();
    Ok(OddMultiplicityReport {
        odd_groups: odd.len(),
        violations: odd.iter().filter(|g| g.invariant_modes == 0).count(),
    })
}

/// `λ_{0,1} − π²/diam²` against the slack from the diameter's grid error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiameterBoundReport<T> {
    pub lambda01: T,
    pub diameter: Diameter<T>,
    pub margin: T,
    pub slack: T,
}

impl<T: Real> DiameterBoundReport<T> {
    pub fn holds(&self) -> bool {
        self.margin >= -self.slack
    }
}

pub fn diameter_eigenvalue_bound_check<T: Real>(t: &FlatTorus<T>, resolution: usize) -> Result<DiameterBoundReport<T>> {
    let lambda = lambda01(t);
    let diameter = diameter(t, resolution)?;
    let pi2 = T::pi() * T::pi();
    let at_grid = pi2 / (diameter.value * diameter.value);
    let upper = diameter.value + diameter.error;
    Ok(DiameterBoundReport {
        lambda01: lambda,
        diameter,
        margin: lambda - at_grid,
        slack: at_grid - pi2 / (upper * upper) + lit::<T>(1e-12) * lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn diag(v: &[f64]) -> FlatTorus<f64> {
        FlatTorus::new(DMatrix::from_diagonal(&DVector::from_row_slice(v))).unwrap()
    }

    #[test]
    fn first_eigenvalue() {
        let id = FlatTorus::<f64>::identity(2);
        assert!((lambda01(&id) - 4.0 * PI * PI).abs() < 1e-12);
        let t = diag(&[9.0, 0.25]);
        assert!((lambda01(&t) - 4.0 * PI * PI / 9.0).abs() < 1e-12);
        let c = FlatTorus::<f64>::circle(0.5).unwrap();
        assert!((lambda01(&c) - (2.0 * PI / 0.5).powi(2)).abs() < 1e-10);
        assert!(FlatTorus::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
    }

    #[test]
    fn box_doubling_is_stable() {
        for t in [gt_gram::<f64>(0.3), gt_gram::<f64>(2.7), diag(&[9.0, 0.25, 1.0]), FlatTorus::identity(4)] {
            let base = lambda01(&t);
            let r = box_radius(&t.inverse, (0..t.dim()).map(|i| t.inverse[(i, i)]).fold(f64::INFINITY, f64::min));
            assert_eq!(lambda01_in_box(&t, 2 * r.max(1)), base);
        }
    }

    #[test]
    fn mode_counts() {
        let id = FlatTorus::<f64>::identity(2);
        let s = p_form_spectrum(&id, 0, 40.0).unwrap();
        let g = s.groups();
        assert_eq!(g[0].modes, 1);
        assert_eq!(g[1].modes, 4);
        assert!((g[1].eigenvalue - 4.0 * PI * PI).abs() < 1e-12);
        assert_eq!(p_form_spectrum(&id, 1, 40.0).unwrap().harmonic_dim(), 2);
        let s2 = p_form_spectrum(&id, 2, 40.0).unwrap();
        assert_eq!(s2.values(), s.values());
        assert!(p_form_spectrum(&id, 3, 40.0).is_err());
        let csv = s.to_csv();
        assert!(csv.starts_with("gamma_1,gamma_2,eigenvalue,multiplicity,invariant_flag\n0,0,0.0,1,1\n"));
        // symmetric under γ ↦ −γ
        for m in &s.modes {
            let neg: Vec<i64> = m.gamma.iter().map(|x| -x).collect();
            assert!(s.modes.iter().any(|o| o.gamma == neg));
        }
    }

    #[test]
    fn unimodular_invariance() {
        let g = gt_gram::<f64>(0.3);
        let u = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let h = FlatTorus::new(u.transpose() * g.gram() * &u).unwrap();
        let cutoff = 600.0;
        let a = p_form_spectrum(&g, 1, cutoff).unwrap().values();
        let b = p_form_spectrum(&h, 1, cutoff).unwrap().values();
        let safe = |v: &Vec<f64>| v.iter().copied().filter(|&x| x < 0.99 * cutoff).collect::<Vec<_>>();
        let (a, b) = (safe(&a), safe(&b));
        assert_eq!(a.len(), b.len());
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x)));
    }

    #[test]
    fn gt_periodicity() {
        assert_eq!(gt_gram::<f64>(0.0).gram(), &DMatrix::<f64>::identity(2, 2));
        let u = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.0, 1.0]);
        for t in [0.0, 0.5, -1.75, 3.25] {
            assert_eq!(u.transpose() * gt_gram::<f64>(t + 1.0).gram() * &u, *gt_gram::<f64>(t).gram());
        }
        let a = p_form_spectrum(&gt_gram::<f64>(0.3), 0, 500.0).unwrap().values();
        let b = p_form_spectrum(&gt_gram::<f64>(1.3), 0, 500.0).unwrap().values();
        let n = a.iter().filter(|&&x| x < 490.0).count();
        assert!(a[..n].iter().zip(&b[..n]).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x)));
    }

    #[test]
    fn covering_radius() {
        let d = diameter(&FlatTorus::<f64>::identity(2), 200).unwrap();
        assert!((d.value - 0.5f64.sqrt()).abs() < 1e-15);
        let c = diameter(&FlatTorus::<f64>::circle(3.0).unwrap(), 200).unwrap();
        assert!((c.value - 1.5).abs() < 1e-12);
        let d0 = diameter(&gt_gram::<f64>(0.0), 100).unwrap();
        let d1 = diameter(&gt_gram::<f64>(1.0), 100).unwrap();
        assert!((d0.value - d1.value).abs() <= d0.error + d1.error);
        let hex = FlatTorus::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0])).unwrap();
        let h = diameter(&hex, 120).unwrap();
        // circumradius of the unit equilateral triangle
        assert!((h.value - 1.0 / 3f64.sqrt()).abs() <= h.error + 1e-12);
        assert!(diameter(&FlatTorus::<f64>::identity(4), 10).is_err());
    }

    #[test]
    fn diameter_bounds() {
        assert!(diameter_eigenvalue_bound_check(&FlatTorus::<f64>::identity(2), 100).unwrap().holds());
        let r = diameter_eigenvalue_bound_check(&FlatTorus::<f64>::circle(0.7).unwrap(), 200).unwrap();
        assert!(r.margin.abs() < 1e-9 && r.holds());
        assert!(diameter_eigenvalue_bound_check(&gt_gram::<f64>(0.5), 100).unwrap().holds());
    }

    #[test]
    fn thresholds() {
        let base = FlatTorus::<f64>::circle(1.0).unwrap();
        let fiber = FlatTorus::<f64>::circle(0.1).unwrap();
        let r = threshold_check_product(&base, &fiber, 0, 4000.0 + 400.0 * PI * PI).unwrap();
        assert!(r.holds());
        assert!((r.first_non_invariant.unwrap() - 400.0 * PI * PI).abs() < 1e-9);
        let r = threshold_check_product(&FlatTorus::identity(2), &FlatTorus::identity(2), 1, 100.0).unwrap();
        assert!(r.holds());
        assert!(threshold_check_product(&base, &fiber, 0, 10.0).is_err());
    }

    #[test]
    fn odd_multiplicities() {
        let product = FlatTorus::product(&FlatTorus::<f64>::circle(1.3).unwrap(), &FlatTorus::identity(2));
        let r = odd_multiplicity_check(&product, 0, 200.0).unwrap();
        assert!(r.odd_groups >= 1);
        assert_eq!(r.violations, 0);
    }
}
