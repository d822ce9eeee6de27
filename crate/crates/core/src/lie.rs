//! Chevalley–Eilenberg complex of a Lie algebra given in an orthonormal frame.
//!
//! A [`StructureConstants`] table stores `[e_i, e_j] = Σ_k c[i][j][k] e_k` for a
//! frame that is *declared* orthonormal; a left-invariant metric is therefore
//! encoded entirely by the choice of frame (see [`change_frame`]). Invariant
//! `p`-forms are expanded in the basis `ξ^{i_1} ∧ … ∧ ξ^{i_p}` (strictly
//! increasing, lexicographic order), which is orthonormal for the induced
//! metric, so the codifferential is the plain transpose of `d`.
//!
//! Sign convention: `dξ^k(e_i, e_j) = -c[i][j][k]`, i.e. `dα(U, V) = -α([U, V])`
//! for invariant fields, extended as an antiderivation.

use std::collections::HashMap;
use std::fmt::Write as _;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{binomial, lit, max_abs, symmetrize, to_f64, Real};

/// Jacobi defect accepted by validating constructors, relative to `max|c|²`.
pub const JACOBI_TOL: f64 = 1e-9;
/// Symmetry tolerance for assembled Laplacians.
pub const SYM_TOL: f64 = 1e-10;
/// Negative eigenvalues above `-EIG_TOL` are clamped to zero.
pub const EIG_TOL: f64 = 1e-9;
/// Relative tolerance when grouping eigenvalues into multiplicities.
pub const GROUP_REL_TOL: f64 = 1e-8;
/// Normalized-determinant threshold below which a frame is rejected.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Bracket table of a real Lie algebra in a declared-orthonormal frame.
///
/// Antisymmetry holds by construction: every write sets both `c[i][j][k]` and
/// `c[j][i][k] = -c[i][j][k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants<T> {
    n: usize,
    c: Vec<T>,
}

impl<T: Real> StructureConstants<T> {
    /// The abelian algebra `ℝⁿ`.
    pub fn abelian(n: usize) -> Self {
        assert!(n > 0, "dimension must be positive");
        Self {
            n,
            c: vec![T::zero(); n * n * n],
        }
    }

    /// Builds a table from `(i, j, k, value)` entries meaning `[e_i, e_j] ∋ value·e_k`
    /// (0-based). The Jacobi identity is checked.
    pub fn from_entries<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, usize, T)>,
    {
        let table = Self::try_from_entries_unchecked(n, entries)?;
        table.validate()?;
        Ok(table)
    }

    /// Like [`Self::from_entries`] but skips the Jacobi check; useful for
    /// probing invalid tables.
    pub fn from_entries_unchecked<I>(n: usize, entries: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, usize, T)>,
    {
        Self::try_from_entries_unchecked(n, entries).expect("valid bracket indices")
    }

    fn try_from_entries_unchecked<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, usize, T)>,
    {
        if n == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let mut table = Self::abelian(n);
        for (i, j, k, v) in entries {
            if i >= n || j >= n || k >= n {
                return Err(Error::InvalidInput(format!(
                    "bracket index ({i},{j},{k}) out of range for n = {n}"
                )));
            }
            if i == j {
                if v != T::zero() {
                    return Err(Error::InvalidInput(format!(
                        "[e_{i}, e_{i}] must vanish"
                    )));
                }
                continue;
            }
            table.set(i, j, k, v);
        }
        Ok(table)
    }

    /// Builds the table from a dense closure `f(i, j, k)`; only `i < j` is queried.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut table = Self::abelian(n);
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    let v = f(i, j, k);
                    if v != T::zero() {
                        table.set(i, j, k, v);
                    }
                }
            }
        }
        table
    }

    fn validate(&self) -> Result<()> {
        let defect = jacobi_defect(self);
        let scale = self.max_abs();
        if defect > lit::<T>(JACOBI_TOL) * scale * scale {
            return Err(Error::JacobiViolation {
                defect: to_f64(defect),
            });
        }
        Ok(())
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    fn set(&mut self, i: usize, j: usize, k: usize, v: T) {
        let a = self.idx(i, j, k);
        let b = self.idx(j, i, k);
        self.c[a] = v;
        self.c[b] = -v;
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `c[i][j][k]`, the `e_k` component of `[e_i, e_j]`.
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.c[self.idx(i, j, k)]
    }

    pub fn max_abs(&self) -> T {
        self.c.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn is_abelian(&self) -> bool {
        self.c.iter().all(|&x| x == T::zero())
    }

    /// Bracket of two coefficient vectors.
    pub fn bracket(&self, u: &DVector<T>, v: &DVector<T>) -> DVector<T> {
        let n = self.n;
        let mut out = DVector::zeros(n);
        for i in 0..n {
            if u[i] == T::zero() {
                continue;
            }
            for j in 0..n {
                let w = u[i] * v[j];
                if w == T::zero() {
                    continue;
                }
                for k in 0..n {
                    out[k] += w * self.get(i, j, k);
                }
            }
        }
        out
    }

    /// Matrix of `ad_u = [u, ·]`; column `j` holds `[u, e_j]`.
    pub fn ad(&self, u: &DVector<T>) -> DMatrix<T> {
        let n = self.n;
        DMatrix::from_fn(n, n, |k, j| {
            (0..n).fold(T::zero(), |acc, i| acc + u[i] * self.get(i, j, k))
        })
    }

    /// Nonzero entries with `i < j`, in index order.
    pub fn nonzero_entries(&self) -> Vec<(usize, usize, usize, T)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                for k in 0..self.n {
                    let v = self.get(i, j, k);
                    if v != T::zero() {
                        out.push((i, j, k, v));
                    }
                }
            }
        }
        out
    }

    /// Plain-text record: `n = <int>` followed by `c i j k = <float>` lines
    /// (1-based indices, `i < j`, nonzero entries only).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "n = {}", self.n).unwrap();
        for (i, j, k, v) in self.nonzero_entries() {
            writeln!(s, "c {} {} {} = {:?}", i + 1, j + 1, k + 1, to_f64(v)).unwrap();
        }
        s
    }

    /// Parses the format written by [`Self::to_text`]. Blank lines and `#`
    /// comments are ignored; an entry given with `i > j` is stored with the
    /// antisymmetric sign.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: &str| Error::Parse {
                line: lineno + 1,
                msg: msg.to_string(),
            };
            let (lhs, rhs) = line.split_once('=').ok_or_else(|| perr("expected '='"))?;
            let lhs: Vec<&str> = lhs.split_whitespace().collect();
            let rhs = rhs.trim();
            match lhs.as_slice() {
                ["n"] => {
                    if n.is_some() {
                        return Err(perr("duplicate dimension line"));
                    }
                    n = Some(rhs.parse().map_err(|_| perr("bad dimension"))?);
                }
                ["c", i, j, k] => {
                    let parse_idx = |s: &str| -> Result<usize> {
                        let v: usize = s.parse().map_err(|_| perr("bad index"))?;
                        if v == 0 {
                            return Err(perr("indices are 1-based"));
                        }
                        Ok(v - 1)
                    };
                    let v: f64 = rhs.parse().map_err(|_| perr("bad value"))?;
                    entries.push((parse_idx(i)?, parse_idx(j)?, parse_idx(k)?, lit::<T>(v), lineno + 1));
                }
                _ => return Err(perr("unrecognized line")),
            }
        }
        let n = n.ok_or(Error::Parse {
            line: 0,
            msg: "missing 'n = <int>' line".into(),
        })?;
        for &(i, j, k, _, line) in &entries {
            if i >= n || j >= n || k >= n {
                return Err(Error::Parse {
                    line,
                    msg: format!("index out of range for n = {n}"),
                });
            }
        }
        Self::from_entries(n, entries.into_iter().map(|(i, j, k, v, _)| (i, j, k, v)))
    }
}

/// Max-norm of the cyclic Jacobi sum `[[e_i,e_j],e_l] + [[e_j,e_l],e_i] + [[e_l,e_i],e_j]`.
pub fn jacobi_defect<T: Real>(l: &StructureConstants<T>) -> T {
    let n = l.dim();
    let mut worst = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                for m in 0..n {
                    let mut s = T::zero();
                    for p in 0..n {
                        s += l.get(i, j, p) * l.get(p, k, m)
                            + l.get(j, k, p) * l.get(p, i, m)
                            + l.get(k, i, p) * l.get(p, j, m);
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

/// `max_i |tr ad_{e_i}|`; zero exactly for unimodular algebras.
pub fn unimodularity_defect<T: Real>(l: &StructureConstants<T>) -> T {
    let n = l.dim();
    (0..n).fold(T::zero(), |acc, i| {
        let tr = (0..n).fold(T::zero(), |s, k| s + l.get(i, k, k));
        acc.max(tr.abs())
    })
}

/// Rewrites the brackets in the frame `f_j = Σ_i P[i][j] e_i`, which is then
/// declared orthonormal.
pub fn change_frame<T: Real>(
    l: &StructureConstants<T>,
    p: &DMatrix<T>,
) -> Result<StructureConstants<T>> {
    let n = l.dim();
    if p.nrows() != n || p.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "frame matrix is {}x{}, algebra has dimension {n}",
            p.nrows(),
            p.ncols()
        )));
    }
    let ratio = hadamard_ratio(p);
    if !(ratio >= lit::<T>(SINGULAR_TOL)) {
        return Err(Error::SingularFrame {
            ratio: to_f64(ratio),
        });
    }
    let p_inv = p
        .clone()
        .try_inverse()
        .ok_or(Error::SingularFrame { ratio: 0.0 })?;
    // brackets of new frame vectors expressed in the old frame
    let mut out = StructureConstants::abelian(n);
    let cols: Vec<DVector<T>> = (0..n).map(|j| p.column(j).into_owned()).collect();
    for a in 0..n {
        for b in (a + 1)..n {
            let br = l.bracket(&cols[a], &cols[b]);
            let coeffs = &p_inv * br;
            for m in 0..n {
                if coeffs[m] != T::zero() {
                    out.set(a, b, m, coeffs[m]);
                }
            }
        }
    }
    Ok(out)
}

/// `|det P| / Π_j ‖P e_j‖`, a scale-free singularity measure in `[0, 1]`.
fn hadamard_ratio<T: Real>(p: &DMatrix<T>) -> T {
    let det = p.clone().determinant().abs();
    let prod = p
        .column_iter()
        .fold(T::one(), |acc, col| acc * col.norm());
    if prod == T::zero() {
        T::zero()
    } else {
        det / prod
    }
}

/// Direct sum `L₁ ⊕ L₂`; the frame of `L₂` follows that of `L₁`.
pub fn direct_sum<T: Real>(
    l1: &StructureConstants<T>,
    l2: &StructureConstants<T>,
) -> StructureConstants<T> {
    let n1 = l1.dim();
    let mut entries = l1.nonzero_entries();
    entries.extend(
        l2.nonzero_entries()
            .into_iter()
            .map(|(i, j, k, v)| (i + n1, j + n1, k + n1, v)),
    );
    StructureConstants::from_entries_unchecked(n1 + l2.dim(), entries)
}

/// Lexicographically ordered basis of `Λᵖ` in dimension `n`.
#[derive(Clone, Debug)]
pub struct FormBasis {
    n: usize,
    p: usize,
    tuples: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl FormBasis {
    pub fn new(n: usize, p: usize) -> Result<Self> {
        if p > n {
            return Err(Error::DegreeOutOfRange { p, n });
        }
        let tuples: Vec<Vec<usize>> = (0..n).combinations(p).collect();
        let index = tuples
            .iter()
            .enumerate()
            .map(|(r, t)| (t.clone(), r))
            .collect();
        Ok(Self { n, p, tuples, index })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuple(&self, rank: usize) -> &[usize] {
        &self.tuples[rank]
    }

    /// Rank of a strictly increasing tuple.
    pub fn rank(&self, tuple: &[usize]) -> Option<usize> {
        self.index.get(tuple).copied()
    }

    pub fn tuples(&self) -> impl Iterator<Item = &[usize]> {
        self.tuples.iter().map(Vec::as_slice)
    }
}

/// Matrix of `d : Λᵖ → Λᵖ⁺¹` (shape `C(n,p+1) × C(n,p)`).
pub fn exterior_derivative<T: Real>(l: &StructureConstants<T>, p: usize) -> Result<DMatrix<T>> {
    let n = l.dim();
    if p > n {
        return Err(Error::DegreeOutOfRange { p, n });
    }
    let src = FormBasis::new(n, p)?;
    let rows = binomial(n as i64, p as i64 + 1);
    let mut d = DMatrix::zeros(rows, src.len());
    if rows == 0 {
        return Ok(d);
    }
    let dst = FormBasis::new(n, p + 1)?;
    let mut rest = Vec::with_capacity(p);
    let mut target = Vec::with_capacity(p);
    for (row, jt) in dst.tuples().enumerate() {
        for a in 0..=p {
            for b in (a + 1)..=p {
                let sign_ab = if (a + b) % 2 == 0 { T::one() } else { -T::one() };
                rest.clear();
                rest.extend(
                    jt.iter()
                        .enumerate()
                        .filter(|&(pos, _)| pos != a && pos != b)
                        .map(|(_, &x)| x),
                );
                for k in 0..n {
                    let ck = l.get(jt[a], jt[b], k);
                    if ck == T::zero() || rest.contains(&k) {
                        continue;
                    }
                    // ξ^I(e_k, e_rest) = sign of the permutation sorting (k, rest)
                    let pos = rest.iter().filter(|&&x| x < k).count();
                    target.clear();
                    target.extend_from_slice(&rest[..pos]);
                    target.push(k);
                    target.extend_from_slice(&rest[pos..]);
                    let col = src.rank(&target).expect("tuple in basis");
                    let sign_k = if pos % 2 == 0 { T::one() } else { -T::one() };
                    d[(row, col)] += sign_ab * sign_k * ck;
                }
            }
        }
    }
    Ok(d)
}

/// Matrix of `δ : Λᵖ → Λᵖ⁻¹`, the transpose of `d_{p-1}` in orthonormal bases.
pub fn codifferential<T: Real>(l: &StructureConstants<T>, p: usize) -> Result<DMatrix<T>> {
    let n = l.dim();
    if p == 0 || p > n {
        return Err(Error::DegreeOutOfRange { p, n });
    }
    Ok(exterior_derivative(l, p - 1)?.transpose())
}

/// The pair `(d_{p-1}, d_p)` framing degree `p`; absent maps are `None`.
fn neighbours<T: Real>(
    l: &StructureConstants<T>,
    p: usize,
) -> Result<(Option<DMatrix<T>>, Option<DMatrix<T>>)> {
    let n = l.dim();
    if p > n {
        return Err(Error::DegreeOutOfRange { p, n });
    }
    let down = if p >= 1 {
        Some(exterior_derivative(l, p - 1)?)
    } else {
        None
    };
    let up = if p < n {
        Some(exterior_derivative(l, p)?)
    } else {
        None
    };
    Ok((down, up))
}

/// Hodge Laplacian `dδ + δd` on invariant `p`-forms.
pub fn laplacian<T: Real>(l: &StructureConstants<T>, p: usize) -> Result<DMatrix<T>> {
    let n = l.dim();
    let dim = binomial(n as i64, p as i64);
    let (down, up) = neighbours(l, p)?;
    let mut lap = DMatrix::zeros(dim, dim);
    if let Some(dm) = &down {
        lap += dm * dm.transpose();
    }
    if let Some(du) = &up {
        lap += du.transpose() * du;
    }
    Ok(symmetrize(&lap))
}

/// Eigenvalue with its multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenGroup<T> {
    pub value: T,
    pub multiplicity: usize,
}

/// Sorted spectrum of a symmetric PSD operator.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport<T> {
    pub eigenvalues: Vec<T>,
    pub groups: Vec<EigenGroup<T>>,
    pub kernel_dim: usize,
}

impl<T: Real> SpectrumReport<T> {
    /// Builds a report from raw eigenvalues, zeroing the smallest `kernel_dim`.
    pub fn from_eigenvalues(mut values: Vec<T>, kernel_dim: usize) -> Result<Self> {
        let eig_tol = lit::<T>(EIG_TOL);
        let scale = values.iter().fold(T::one(), |acc, &x| acc.max(x.abs()));
        for v in values.iter_mut() {
            if *v < -eig_tol * scale {
                return Err(Error::NegativeEigenvalue { value: to_f64(*v) });
            }
            if *v < T::zero() {
                *v = T::zero();
            }
        }
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        let kernel_dim = kernel_dim.min(values.len());
        for v in values.iter_mut().take(kernel_dim) {
            *v = T::zero();
        }
        let groups = group_values(&values, kernel_dim);
        Ok(Self {
            eigenvalues: values,
            groups,
            kernel_dim,
        })
    }

    /// Spectrum of a symmetric matrix; the kernel is everything at or below
    /// `EIG_TOL · max(1, λ_max)`.
    pub fn from_symmetric(m: &DMatrix<T>) -> Result<Self> {
        let values: Vec<T> = if m.nrows() == 0 {
            Vec::new()
        } else {
            SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().copied().collect()
        };
        let scale = values.iter().fold(T::one(), |acc, &x| acc.max(x.abs()));
        let cut = lit::<T>(EIG_TOL) * scale;
        let kernel = values.iter().filter(|&&v| v <= cut).count();
        Self::from_eigenvalues(values, kernel)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Nonzero eigenvalues in ascending order.
    pub fn nonzero(&self) -> &[T] {
        &self.eigenvalues[self.kernel_dim..]
    }

    pub fn smallest_nonzero(&self) -> Option<T> {
        self.nonzero().first().copied()
    }

    /// Largest absolute elementwise difference to another report of equal size.
    pub fn max_abs_diff(&self, other: &Self) -> Option<T> {
        if self.dim() != other.dim() {
            return None;
        }
        Some(
            self.eigenvalues
                .iter()
                .zip(&other.eigenvalues)
                .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs())),
        )
    }
}

fn group_values<T: Real>(values: &[T], kernel_dim: usize) -> Vec<EigenGroup<T>> {
    let mut groups = Vec::new();
    if kernel_dim > 0 {
        groups.push(EigenGroup {
            value: T::zero(),
            multiplicity: kernel_dim,
        });
    }
    let rel = lit::<T>(GROUP_REL_TOL);
    let mut start = kernel_dim;
    while start < values.len() {
        let anchor = values[start];
        let mut end = start + 1;
        while end < values.len() && (values[end] - anchor).abs() <= rel * values[end].abs().max(anchor.abs()) {
            end += 1;
        }
        let count = end - start;
        let mean = values[start..end].iter().fold(T::zero(), |a, &b| a + b)
            / T::from_usize(count).unwrap();
        groups.push(EigenGroup {
            value: mean,
            multiplicity: count,
        });
        start = end;
    }
    groups
}

/// Relative singular-value threshold for structural rank decisions on `d`.
fn rank_rel_tol<T: Real>() -> T {
    T::default_epsilon() * lit::<T>(1e4)
}

/// Numerical rank with threshold `rank_rel_tol · max(1, σ_max) · max(rows, cols)`.
pub fn numerical_rank<T: Real>(m: &DMatrix<T>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().fold(T::one(), |acc, &x| acc.max(x));
    let size = T::from_usize(m.nrows().max(m.ncols())).unwrap();
    let cut = rank_rel_tol::<T>() * smax * size;
    sv.iter().filter(|&&s| s > cut).count()
}

/// Spectrum of `Δᵖ`. The kernel dimension is `C(n,p) − rank d_p − rank d_{p-1}`,
/// decided from the singular values of `d` rather than from the eigenvalues,
/// so that genuinely small eigenvalues (`~ε⁴` in collapse families) are not
/// mistaken for harmonic forms.
pub fn spectrum<T: Real>(l: &StructureConstants<T>, p: usize) -> Result<SpectrumReport<T>> {
    let n = l.dim();
    let (down, up) = neighbours(l, p)?;
    let dim = binomial(n as i64, p as i64);
    let r_down = down.as_ref().map_or(0, numerical_rank);
    let r_up = up.as_ref().map_or(0, numerical_rank);
    let kernel = dim.saturating_sub(r_down + r_up);
    let lap = laplacian(l, p)?;
    let values = SymmetricEigen::new(lap).eigenvalues.iter().copied().collect();
    SpectrumReport::from_eigenvalues(values, kernel)
}

/// Dimensions of the `λ`-eigenspace of `Δᵖ` and of its coclosed and closed parts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EigenspaceSplit {
    pub eigenspace: usize,
    pub coclosed: usize,
    pub closed: usize,
}

/// Splits the `λ`-eigenspace of `Δᵖ` (eigenvalues within `tol` of `λ`) into
/// the parts killed by `δ` and by `d`.
pub fn eigenspace_split<T: Real>(
    l: &StructureConstants<T>,
    p: usize,
    lambda: T,
    tol: T,
) -> Result<EigenspaceSplit> {
    let (down, up) = neighbours(l, p)?;
    let eig = SymmetricEigen::new(laplacian(l, p)?);
    let picked: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| (eig.eigenvalues[i] - lambda).abs() <= tol)
        .collect();
    let m = picked.len();
    if m == 0 {
        return Ok(EigenspaceSplit {
            eigenspace: 0,
            coclosed: 0,
            closed: 0,
        });
    }
    let basis = DMatrix::from_fn(eig.eigenvectors.nrows(), m, |r, c| {
        eig.eigenvectors[(r, picked[c])]
    });
    let closed = match &up {
        Some(du) => m - numerical_rank(&(du * &basis)),
        None => m,
    };
    let coclosed = match &down {
        Some(dm) => m - numerical_rank(&(dm.transpose() * &basis)),
        None => m,
    };
    Ok(EigenspaceSplit {
        eigenspace: m,
        coclosed,
        closed,
    })
}

/// Largest entry of `d_{p+1} · d_p`.
pub fn d_squared_defect<T: Real>(l: &StructureConstants<T>, p: usize) -> Result<T> {
    let n = l.dim();
    if p + 1 > n {
        return Ok(T::zero());
    }
    let d0 = exterior_derivative(l, p)?;
    let d1 = exterior_derivative(l, p + 1)?;
    if d1.nrows() == 0 {
        return Ok(T::zero());
    }
    Ok(max_abs(&(d1 * d0)))
}

/// The 3-dimensional Heisenberg algebra `[e₁, e₂] = e₃` (0-based: `[e_0, e_1] = e_2`).
pub fn heisenberg<T: Real>() -> StructureConstants<T> {
    StructureConstants::from_entries_unchecked(3, [(0, 1, 2, T::one())])
}

/// Heisenberg algebra in the frame `(ε^{-α}X, ε^{-β}Y, ε^{-γ}Z)`; the only
/// bracket is `[X_ε, Y_ε] = ε^{γ-α-β} Z_ε`.
pub fn heisenberg_scaled<T: Real>(alpha: T, beta: T, gamma: T, eps: T) -> Result<StructureConstants<T>> {
    let p = DMatrix::from_diagonal(&DVector::from_vec(vec![
        eps.powf(-alpha),
        eps.powf(-beta),
        eps.powf(-gamma),
    ]));
    change_frame(&heisenberg(), &p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn broken_heisenberg() -> StructureConstants<f64> {
        StructureConstants::from_entries_unchecked(3, [(0, 1, 2, 1.0), (0, 2, 0, 0.1)])
    }

    #[test]
    fn jacobi_cases() {
        assert_eq!(jacobi_defect(&StructureConstants::<f64>::abelian(4)), 0.0);
        assert_eq!(jacobi_defect(&heisenberg::<f64>()), 0.0);
        assert!(jacobi_defect(&broken_heisenberg()) > 0.05);
        // [e₁,e₃] ∝ e₂ on top of Heisenberg is still a Lie algebra in dimension 3
        let still_lie =
            StructureConstants::from_entries_unchecked(3, [(0, 1, 2, 1.0), (0, 2, 1, 0.1)]);
        assert_eq!(jacobi_defect(&still_lie), 0.0);
        assert!(matches!(
            StructureConstants::from_entries(3, [(0, 1, 2, 1.0), (0, 2, 0, 0.1)]),
            Err(Error::JacobiViolation { .. })
        ));
    }

    #[test]
    fn antisymmetry_by_storage() {
        let l = heisenberg::<f64>();
        assert_eq!(l.get(0, 1, 2), 1.0);
        assert_eq!(l.get(1, 0, 2), -1.0);
        let rev = StructureConstants::from_entries(3, [(1, 0, 2, -1.0)]).unwrap();
        assert_eq!(rev, l);
    }

    #[test]
    fn diagonal_bracket_rejected() {
        assert!(StructureConstants::from_entries(2, [(1, 1, 0, 1.0)]).is_err());
        assert!(StructureConstants::from_entries(2, [(0, 1, 5, 1.0)]).is_err());
    }

    #[test]
    fn form_basis_lexicographic() {
        let b = FormBasis::new(4, 2).unwrap();
        let tuples: Vec<Vec<usize>> = b.tuples().map(<[usize]>::to_vec).collect();
        assert_eq!(
            tuples,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(b.rank(&[1, 3]), Some(4));
        assert_eq!(b.rank(&[3, 1]), None);
        assert!(FormBasis::new(2, 3).is_err());
        assert_eq!(FormBasis::new(3, 0).unwrap().len(), 1);
    }

    #[test]
    fn degree_one_columns_follow_sign_convention() {
        let l = heisenberg::<f64>();
        let d1 = exterior_derivative(&l, 1).unwrap();
        // rows (0,1),(0,2),(1,2); column 2 is ξ³
        assert_eq!(d1[(0, 2)], -1.0);
        assert_eq!(d1.column(0).iter().filter(|x| **x != 0.0).count(), 0);
        assert_eq!(d1.column(1).iter().filter(|x| **x != 0.0).count(), 0);
    }

    #[test]
    fn out_of_range_degrees() {
        let l = heisenberg::<f64>();
        assert_eq!(
            exterior_derivative(&l, 4).unwrap_err(),
            Error::DegreeOutOfRange { p: 4, n: 3 }
        );
        assert!(codifferential(&l, 0).is_err());
        assert!(laplacian(&l, 4).is_err());
        assert_eq!(exterior_derivative(&l, 3).unwrap().shape(), (0, 1));
    }

    #[test]
    fn heisenberg_eps_frame() {
        let (alpha, beta, gamma, eps) = (1.0, 1.0, 3.0, 0.1f64);
        let tau: f64 = gamma - alpha - beta;
        let l = heisenberg_scaled(alpha, beta, gamma, eps).unwrap();
        let d1 = exterior_derivative(&l, 1).unwrap();
        assert_relative_eq!(d1[(0, 2)], -eps.powf(tau), max_relative = 1e-12);
        let delta = codifferential(&l, 2).unwrap();
        // δ(X♭∧Y♭) = -ε^τ Z♭
        assert_relative_eq!(delta[(2, 0)], -eps.powf(tau), max_relative = 1e-12);
        let s = spectrum(&l, 1).unwrap();
        assert_eq!(s.kernel_dim, 2);
        assert_relative_eq!(s.eigenvalues[2], eps.powf(2.0 * tau), max_relative = 1e-10);
    }

    #[test]
    fn abelian_is_flat_everywhere() {
        let l = StructureConstants::<f64>::abelian(3);
        for p in 0..=3 {
            assert_eq!(max_abs(&exterior_derivative(&l, p).unwrap()), 0.0);
            assert_eq!(max_abs(&laplacian(&l, p).unwrap()), 0.0);
        }
        let s = spectrum(&l, 2).unwrap();
        assert_eq!(s.kernel_dim, 3);
        assert_eq!(s.groups, vec![EigenGroup { value: 0.0, multiplicity: 3 }]);
    }

    #[test]
    fn change_frame_identity_and_singular() {
        let l = heisenberg::<f64>();
        assert_eq!(change_frame(&l, &DMatrix::identity(3, 3)).unwrap(), l);
        let sing = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 2.0, 4.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(change_frame(&l, &sing), Err(Error::SingularFrame { .. })));
        assert!(matches!(
            change_frame(&l, &DMatrix::identity(2, 2)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn unimodularity_cases() {
        assert_eq!(unimodularity_defect(&StructureConstants::<f64>::abelian(2)), 0.0);
        let aff = StructureConstants::from_entries(2, [(0, 1, 1, 1.0)]).unwrap();
        assert_eq!(unimodularity_defect(&aff), 1.0);
    }

    #[test]
    fn text_round_trip_and_errors() {
        let l = heisenberg_scaled(1.0, 1.0, 2.5, 0.3).unwrap();
        let back = StructureConstants::<f64>::from_text(&l.to_text()).unwrap();
        assert_eq!(back, l);
        let parsed = StructureConstants::<f64>::from_text("# comment\nn = 3\nc 2 1 3 = -1\n").unwrap();
        assert_eq!(parsed, heisenberg());
        assert!(matches!(
            StructureConstants::<f64>::from_text("n = 3\nc 0 1 2 = 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(StructureConstants::<f64>::from_text("c 1 2 3 = 1\n").is_err());
        assert!(StructureConstants::<f64>::from_text("n = 2\nc 1 2 3 = 1\n").is_err());
    }

    #[test]
    fn direct_sum_spectrum_is_union() {
        let h = heisenberg::<f64>();
        let sum = direct_sum(&h, &StructureConstants::abelian(1));
        assert_eq!(sum.dim(), 4);
        let s = spectrum(&sum, 1).unwrap();
        assert_eq!(s.kernel_dim, 3);
        assert_relative_eq!(s.eigenvalues[3], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn single_precision_heisenberg() {
        let l = heisenberg_scaled(1.0f32, 1.0, 3.0, 0.5).unwrap();
        let s = spectrum(&l, 1).unwrap();
        assert_eq!(s.kernel_dim, 2);
        assert!((s.eigenvalues[2] - 0.25).abs() < 1e-5);
    }

    #[test]
    fn negative_spectrum_rejected() {
        assert!(SpectrumReport::from_eigenvalues(vec![-1.0f64, 1.0], 0).is_err());
        let r = SpectrumReport::from_eigenvalues(vec![-1e-12f64, 2.0, 2.0 + 1e-12], 1).unwrap();
        assert_eq!(r.eigenvalues[0], 0.0);
        assert_eq!(r.groups.len(), 2);
        assert_eq!(r.groups[1].multiplicity, 2);
    }
}
