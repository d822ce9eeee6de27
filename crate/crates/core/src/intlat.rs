//! Exact integer-lattice tools and real matrix exponential/logarithm.
//!
//! Lattice computations use `BigInt`/`BigRational` and never round. The
//! matrix functions are floating point and generic over [`Real`].

use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::{lit, norm_inf, norm_one, to_f64, Real};

/// Dense matrix of arbitrary-precision integers, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntegerMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntegerMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    /// Builds from row slices; all rows must share a length.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.as_ref().len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            assert_eq!(row.len(), c, "ragged integer matrix");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = BigInt::from(v);
            }
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> BigInt) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Converts a real matrix whose entries are all integers.
    pub fn from_real<T: Real>(m: &DMatrix<T>) -> Option<Self> {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = to_f64(m[(i, j)]);
                if !v.is_finite() || v.fract() != 0.0 {
                    return None;
                }
                out[(i, j)] = BigInt::from(v as i128);
            }
        }
        Some(out)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "integer matrix product shape");
        Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).fold(BigInt::zero(), |acc, k| acc + &self[(i, k)] * &other[(k, j)])
        })
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] - &other[(i, j)])
    }

    /// Determinant by fraction-free Bareiss elimination.
    pub fn determinant(&self) -> BigInt {
        assert!(self.is_square(), "determinant of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[(k, k)].is_zero() {
                let Some(swap) = (k + 1..n).find(|&i| !a[(i, k)].is_zero()) else {
                    return BigInt::zero();
                };
                a.swap_rows(k, swap);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)];
                    a[(i, j)] = v / &prev;
                }
            }
            prev = a[(k, k)].clone();
        }
        sign * a[(n - 1, n - 1)].clone()
    }

    pub fn to_real<T: Real>(&self) -> DMatrix<T> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| {
            lit::<T>(self[(i, j)].to_f64().unwrap_or(f64::NAN))
        })
    }

    pub fn to_rational(&self) -> RationalMatrix {
        RationalMatrix::from_fn(self.rows, self.cols, |i, j| {
            BigRational::from_integer(self[(i, j)].clone())
        })
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// `row[target] += q · row[src]`.
    fn add_row(&mut self, target: usize, src: usize, q: &BigInt) {
        for j in 0..self.cols {
            let v = &self[(src, j)] * q;
            self[(target, j)] += v;
        }
    }

    /// `col[target] += q · col[src]`.
    fn add_col(&mut self, target: usize, src: usize, q: &BigInt) {
        for i in 0..self.rows {
            let v = &self[(i, src)] * q;
            self[(i, target)] += v;
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let v = -&self[(r, j)];
            self[(r, j)] = v;
        }
    }

    fn negate_col(&mut self, c: usize) {
        for i in 0..self.rows {
            let v = -&self[(i, c)];
            self[(i, c)] = v;
        }
    }

    /// Text record: `rows cols` header, then one whitespace-separated row per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self[(i, j)].to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "missing 'rows cols' header".into(),
        })?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                line: hline,
                msg: "bad header".into(),
            })?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Parse {
                line: hline,
                msg: "header must be 'rows cols'".into(),
            });
        };
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            let (lno, line) = lines.next().ok_or(Error::Parse {
                line: hline + i + 1,
                msg: format!("expected {rows} rows"),
            })?;
            let vals: Vec<BigInt> = line
                .split_whitespace()
                .map(|t| t.parse::<BigInt>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse {
                    line: lno,
                    msg: "bad integer".into(),
                })?;
            if vals.len() != cols {
                return Err(Error::Parse {
                    line: lno,
                    msg: format!("expected {cols} entries, found {}", vals.len()),
                });
            }
            for (j, v) in vals.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        if let Some((lno, _)) = lines.next() {
            return Err(Error::Parse {
                line: lno,
                msg: "trailing data".into(),
            });
        }
        Ok(m)
    }
}

impl std::ops::Index<(usize, usize)> for IntegerMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntegerMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for IntegerMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// `U · M · V = D` with `U`, `V` unimodular and `D` in Smith form.
#[derive(Clone, Debug)]
pub struct SmithForm {
    pub u: IntegerMatrix,
    pub d: IntegerMatrix,
    pub v: IntegerMatrix,
}

impl SmithForm {
    /// Nonzero diagonal entries of `D` (positive, each dividing the next).
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        (0..self.d.nrows().min(self.d.ncols()))
            .map(|i| self.d[(i, i)].clone())
            .filter(|x| !x.is_zero())
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.invariant_factors().len()
    }
}

/// Smith normal form with smallest-absolute-value pivoting.
pub fn smith_normal_form(m: &IntegerMatrix) -> SmithForm {
    let (r, c) = (m.nrows(), m.ncols());
    let mut d = m.clone();
    let mut u = IntegerMatrix::identity(r);
    let mut v = IntegerMatrix::identity(c);
    for t in 0..r.min(c) {
        let Some((pi, pj)) = min_abs_entry(&d, t..r, t..c) else {
            break;
        };
        d.swap_rows(t, pi);
        u.swap_rows(t, pi);
        d.swap_cols(t, pj);
        v.swap_cols(t, pj);
        loop {
            let mut clean = true;
            for i in t + 1..r {
                if !d[(i, t)].is_zero() {
                    let q = -(&d[(i, t)] / &d[(t, t)]);
                    d.add_row(i, t, &q);
                    u.add_row(i, t, &q);
                    clean &= d[(i, t)].is_zero();
                }
            }
            for j in t + 1..c {
                if !d[(t, j)].is_zero() {
                    let q = -(&d[(t, j)] / &d[(t, t)]);
                    d.add_col(j, t, &q);
                    v.add_col(j, t, &q);
                    clean &= d[(t, j)].is_zero();
                }
            }
            if !clean {
                // a remainder smaller than the pivot survived; promote it
                let best = (t..r)
                    .map(|i| (i, t))
                    .chain((t..c).map(|j| (t, j)))
                    .filter(|&(i, j)| !d[(i, j)].is_zero())
                    .min_by(|&a, &b| d[a].abs().cmp(&d[b].abs()))
                    .expect("pivot row/column nonzero");
                d.swap_rows(t, best.0);
                u.swap_rows(t, best.0);
                d.swap_cols(t, best.1);
                v.swap_cols(t, best.1);
                continue;
            }
            let offender = (t + 1..r)
                .flat_map(|i| (t + 1..c).map(move |j| (i, j)))
                .find(|&(i, j)| !d[(i, j)].is_multiple_of(&d[(t, t)]));
            match offender {
                Some((i, _)) => {
                    d.add_row(t, i, &BigInt::one());
                    u.add_row(t, i, &BigInt::one());
                }
                None => break,
            }
        }
        if d[(t, t)].is_negative() {
            d.negate_row(t);
            u.negate_row(t);
        }
    }
    SmithForm { u, d, v }
}

fn min_abs_entry(
    m: &IntegerMatrix,
    rows: std::ops::Range<usize>,
    cols: std::ops::Range<usize>,
) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in rows {
        for j in cols.clone() {
            if m[(i, j)].is_zero() {
                continue;
            }
            if best.is_none_or(|b| m[(i, j)].abs() < m[b].abs()) {
                best = Some((i, j));
            }
        }
    }
    best
}

/// Abelianization `ℤ^{k+1} × H` of the mapping-torus group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbelianizationReport {
    /// Rank of `ker(A − I)`.
    pub free_rank: usize,
    /// Invariant factors of `A − I` greater than one.
    pub torsion: Vec<BigInt>,
    pub b1: usize,
}

/// First Betti number and torsion of the mapping torus of `A ∈ SL_n(ℤ)`.
pub fn betti1_mapping_torus(a: &IntegerMatrix) -> Result<AbelianizationReport> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("A must be square".into()));
    }
    let det = a.determinant();
    if !det.is_one() {
        return Err(Error::NotUnimodular {
            det: det.to_string(),
        });
    }
    let n = a.nrows();
    let snf = smith_normal_form(&a.sub(&IntegerMatrix::identity(n)));
    let factors = snf.invariant_factors();
    let free_rank = n - factors.len();
    Ok(AbelianizationReport {
        free_rank,
        torsion: factors.into_iter().filter(|f| !f.is_one()).collect(),
        b1: free_rank + 1,
    })
}

/// `d = gcd(a)` and a unimodular `P` whose first column is `a / d`.
pub fn gcd_completion(a: &[BigInt]) -> Result<(BigInt, IntegerMatrix)> {
    if a.iter().all(Zero::is_zero) {
        return Err(Error::ZeroVector);
    }
    let n = a.len();
    let mut w = a.to_vec();
    // invariant: P · w = a, with P unimodular
    let mut p = IntegerMatrix::identity(n);
    loop {
        let piv = (0..n)
            .filter(|&i| !w[i].is_zero())
            .min_by(|&i, &j| w[i].abs().cmp(&w[j].abs()).then(i.cmp(&j)))
            .expect("nonzero vector");
        if piv != 0 {
            w.swap(0, piv);
            p.swap_cols(0, piv);
        }
        let mut done = true;
        for i in 1..n {
            if w[i].is_zero() {
                continue;
            }
            let q = &w[i] / &w[0];
            let step = &q * &w[0];
            w[i] -= step;
            // row_i -= q·row_0 on w is undone by col_0 += q·col_i on P
            p.add_col(0, i, &q);
            done &= w[i].is_zero();
        }
        if done {
            break;
        }
    }
    if w[0].is_negative() {
        w[0] = -w[0].clone();
        p.negate_col(0);
    }
    Ok((w[0].clone(), p))
}

/// Lattice basis of `ker_ℤ M` as the columns of the returned matrix.
pub fn integer_kernel(m: &IntegerMatrix) -> IntegerMatrix {
    let snf = smith_normal_form(m);
    let r = snf.rank();
    let c = m.ncols();
    IntegerMatrix::from_fn(c, c - r, |i, j| snf.v[(i, r + j)].clone())
}

/// Dense matrix of exact rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { BigRational::one() } else { BigRational::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> BigRational) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Exact conversion of finite floating-point entries (dyadic rationals).
    pub fn from_real<T: Real>(m: &DMatrix<T>) -> Option<Self> {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] = BigRational::from_float(to_f64(m[(i, j)]))?;
            }
        }
        Some(out)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "rational matrix product shape");
        Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).fold(BigRational::zero(), |acc, k| acc + &self[(i, k)] * &other[(k, j)])
        })
    }

    pub fn mul_vec(&self, v: &[BigRational]) -> Vec<BigRational> {
        (0..self.rows)
            .map(|i| (0..self.cols).fold(BigRational::zero(), |acc, k| acc + &self[(i, k)] * &v[k]))
            .collect()
    }

    pub fn pow(&self, e: usize) -> Self {
        (0..e).fold(Self::identity(self.rows), |acc, _| acc.mul(self))
    }

    pub fn to_real<T: Real>(&self) -> DMatrix<T> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| {
            lit::<T>(self[(i, j)].to_f64().unwrap_or(f64::NAN))
        })
    }

    /// Reduced row echelon form and its pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..a.cols {
            if row == a.rows {
                break;
            }
            let Some(p) = (row..a.rows).find(|&i| !a[(i, col)].is_zero()) else {
                continue;
            };
            for j in 0..a.cols {
                a.data.swap(row * a.cols + j, p * a.cols + j);
            }
            let inv = a[(row, col)].recip();
            for j in 0..a.cols {
                let v = &a[(row, j)] * &inv;
                a[(row, j)] = v;
            }
            for i in 0..a.rows {
                if i != row && !a[(i, col)].is_zero() {
                    let f = a[(i, col)].clone();
                    for j in 0..a.cols {
                        let v = &a[(row, j)] * &f;
                        a[(i, j)] -= v;
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        (a, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right null space, one vector per free column.
    pub fn kernel(&self) -> Vec<Vec<BigRational>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![BigRational::zero(); self.cols];
                v[f] = BigRational::one();
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = -r[(row, f)].clone();
                }
                v
            })
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for RationalMatrix {
    type Output = BigRational;
    fn index(&self, (i, j): (usize, usize)) -> &BigRational {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RationalMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigRational {
        &mut self.data[i * self.cols + j]
    }
}

/// Rank over ℚ.
pub fn rational_rank(m: &IntegerMatrix) -> usize {
    m.to_rational().rank()
}

/// `exp(B)` by scaling and squaring with a truncated Taylor series.
pub fn matrix_exp<T: Real>(b: &DMatrix<T>, tol: T) -> DMatrix<T> {
    assert!(b.is_square(), "matrix_exp of non-square matrix");
    let n = b.nrows();
    let norm = norm_one(b);
    let half = lit::<T>(0.5);
    let mut s = 0u32;
    let mut scale = T::one();
    while norm * scale > half {
        scale *= half;
        s += 1;
    }
    let a = b * scale;
    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    let eps = tol.min(T::default_epsilon());
    for k in 1..=40 {
        term = &term * &a / T::from_usize(k).unwrap();
        sum += &term;
        if norm_one(&term) <= eps * norm_one(&sum) {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Principal real logarithm of `A` (no eigenvalue on `(-∞, 0]`).
pub fn principal_log<T: Real>(a: &DMatrix<T>, tol: T) -> Result<DMatrix<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("log of non-square matrix".into()));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let scale = norm_inf(a).max(T::one());
    let imag_tol = lit::<T>(1e-10) * scale;
    for ev in a.complex_eigenvalues().iter() {
        if ev.im.abs() <= imag_tol && ev.re <= imag_tol {
            return Err(Error::BranchUnavailable);
        }
    }
    let id = DMatrix::<T>::identity(n, n);
    let quarter = lit::<T>(0.25);
    let mut x = a.clone();
    let mut s = 0i32;
    while norm_one(&(&x - &id)) > quarter {
        x = sqrt_denman_beavers(&x)?;
        s += 1;
        if s > 64 {
            return Err(Error::LogNotConverged { residual: f64::INFINITY });
        }
    }
    let y = &x - &id;
    let mut log = DMatrix::zeros(n, n);
    let mut power = id.clone();
    for k in 1..=200 {
        power = &power * &y;
        let coef = T::one() / T::from_usize(k).unwrap();
        let term = if k % 2 == 1 { &power * coef } else { &power * (-coef) };
        log += &term;
        if norm_one(&term) <= T::default_epsilon() * norm_one(&log).max(T::default_epsilon()) {
            break;
        }
    }
    let log = log * lit::<T>(2f64.powi(s));
    let residual = norm_inf(&(matrix_exp(&log, T::default_epsilon()) - a));
    if residual > tol * (T::one() + norm_inf(a)) {
        return Err(Error::LogNotConverged {
            residual: to_f64(residual),
        });
    }
    Ok(log)
}

fn sqrt_denman_beavers<T: Real>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let half = lit::<T>(0.5);
    let mut y = a.clone();
    let mut z = DMatrix::<T>::identity(n, n);
    for _ in 0..100 {
        let y_inv = y.clone().try_inverse().ok_or(Error::BranchUnavailable)?;
        let z_inv = z.clone().try_inverse().ok_or(Error::BranchUnavailable)?;
        let y_next = (&y + z_inv) * half;
        let z_next = (&z + y_inv) * half;
        let delta = norm_one(&(&y_next - &y));
        y = y_next;
        z = z_next;
        if delta <= lit::<T>(10.0) * T::default_epsilon() * norm_one(&y) {
            return Ok(y);
        }
    }
    Err(Error::LogNotConverged {
        residual: f64::INFINITY,
    })
}

/// `‖exp(B) − A‖∞ ≤ tol`.
pub fn verify_log<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, tol: T) -> bool {
    if a.shape() != b.shape() || !a.is_square() {
        return false;
    }
    norm_inf(&(matrix_exp(b, T::default_epsilon()) - a)) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bi(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn check_smith(m: &IntegerMatrix) -> SmithForm {
        let s = smith_normal_form(m);
        assert_eq!(s.u.mul(m).mul(&s.v), s.d);
        assert!(s.u.determinant().abs().is_one());
        assert!(s.v.determinant().abs().is_one());
        for i in 0..s.d.nrows() {
            for j in 0..s.d.ncols() {
                if i != j {
                    assert!(s.d[(i, j)].is_zero());
                }
            }
        }
        let f = s.invariant_factors();
        for w in f.windows(2) {
            assert!(w[1].is_multiple_of(&w[0]));
        }
        s
    }

    #[test]
    fn smith_examples() {
        let z = check_smith(&IntegerMatrix::zeros(2, 2));
        assert!(z.d.is_zero());
        let shear = IntegerMatrix::from_rows(&[[0, 1], [0, 0]]);
        assert_eq!(check_smith(&shear).invariant_factors(), vec![bi(1)]);
        let cat = IntegerMatrix::from_rows(&[[1, 1], [1, 0]]);
        assert_eq!(check_smith(&cat).invariant_factors(), vec![bi(1), bi(1)]);
        let m = IntegerMatrix::from_rows(&[[2, 4, 4], [-6, 6, 12], [10, -4, -16]]);
        assert_eq!(check_smith(&m).invariant_factors(), vec![bi(2), bi(6), bi(12)]);
        let rect = IntegerMatrix::from_rows(&[[6, 4], [4, 6], [2, 2]]);
        assert_eq!(check_smith(&rect).invariant_factors(), vec![bi(2), bi(2)]);
    }

    #[test]
    fn betti_examples() {
        let b = |rows: &[[i64; 2]]| betti1_mapping_torus(&IntegerMatrix::from_rows(rows)).unwrap().b1;
        assert_eq!(b(&[[1, 0], [0, 1]]), 3);
        assert_eq!(b(&[[1, 1], [0, 1]]), 2);
        assert_eq!(b(&[[2, 1], [1, 1]]), 1);
        let r = betti1_mapping_torus(&IntegerMatrix::from_rows(&[[-1, 0], [0, -1]])).unwrap();
        assert_eq!(r.b1, 1);
        assert_eq!(r.torsion, vec![bi(2), bi(2)]);
        assert!(matches!(
            betti1_mapping_torus(&IntegerMatrix::from_rows(&[[2, 0], [0, 1]])),
            Err(Error::NotUnimodular { .. })
        ));
    }

    #[test]
    fn gcd_completion_examples() {
        let (d, p) = gcd_completion(&[bi(1), bi(0), bi(0)]).unwrap();
        assert_eq!(d, bi(1));
        assert_eq!(p, IntegerMatrix::identity(3));
        let (d, p) = gcd_completion(&[bi(3), bi(6)]).unwrap();
        assert_eq!(d, bi(3));
        assert_eq!(p, IntegerMatrix::from_rows(&[[1, 0], [2, 1]]));
        let (d, p) = gcd_completion(&[bi(4), bi(6)]).unwrap();
        assert_eq!(d, bi(2));
        assert_eq!(p.column(0), vec![bi(2), bi(3)]);
        assert!(p.determinant().abs().is_one());
        let (d, p) = gcd_completion(&[bi(-6), bi(10), bi(15)]).unwrap();
        assert_eq!(d, bi(1));
        assert_eq!(p.column(0), vec![bi(-6), bi(10), bi(15)]);
        assert!(gcd_completion(&[bi(0), bi(0)]).is_err());
    }

    #[test]
    fn integer_kernel_basis() {
        let m = IntegerMatrix::from_rows(&[[3, 6]]);
        let k = integer_kernel(&m);
        assert_eq!(k.ncols(), 1);
        assert!(m.mul(&k).is_zero());
        assert_eq!(k.column(0).iter().map(|x| x.abs()).collect::<Vec<_>>(), vec![bi(2), bi(1)]);
    }

    #[test]
    fn rational_kernel_and_rank() {
        let m = IntegerMatrix::from_rows(&[[1, 2, 3], [2, 4, 6]]);
        assert_eq!(rational_rank(&m), 1);
        let q = m.to_rational();
        let ker = q.kernel();
        assert_eq!(ker.len(), 2);
        for v in &ker {
            assert!(q.mul_vec(v).iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn integer_text_round_trip() {
        let m = IntegerMatrix::from_rows(&[[2, 1], [1, 1]]);
        assert_eq!(m.to_text(), "2 2\n2 1\n1 1\n");
        assert_eq!(IntegerMatrix::from_text(&m.to_text()).unwrap(), m);
        assert!(matches!(
            IntegerMatrix::from_text("2 2\n1 x\n0 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(IntegerMatrix::from_text("2 2\n1 0\n").is_err());
    }

    #[test]
    fn exp_examples() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(matrix_exp(&z, 1e-15), DMatrix::identity(3, 3));
        let nil = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(matrix_exp(&nil, 1e-15), DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]));
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, 2.0 * PI, -2.0 * PI, 0.0]);
        assert!(norm_inf(&(matrix_exp(&rot, 1e-15) - DMatrix::identity(2, 2))) < 1e-10);
    }

    #[test]
    fn log_examples() {
        let id = DMatrix::<f64>::identity(2, 2);
        assert!(norm_inf(&principal_log(&id, 1e-12).unwrap()) < 1e-15);
        let cat = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let b: DMatrix<f64> = principal_log(&cat, 1e-12).unwrap();
        assert!(verify_log(&cat, &b, 1e-10));
        let lam = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((b.trace()).abs() < 1e-12);
        let top: f64 = b.clone().symmetric_eigenvalues().max();
        assert!((top - lam).abs() < 1e-12);
        assert_eq!(
            principal_log(&(-id.clone()), 1e-12).unwrap_err(),
            Error::BranchUnavailable
        );
    }

    #[test]
    fn verify_log_examples() {
        let id = DMatrix::<f64>::identity(2, 2);
        assert!(verify_log(&id, &DMatrix::zeros(2, 2), 1e-12));
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, 2.0 * PI, -2.0 * PI, 0.0]);
        assert!(verify_log(&id, &rot, 1e-10));
        let shear = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let nil = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(verify_log(&shear, &nil, 1e-12));
        assert!(!verify_log(&shear, &DMatrix::zeros(2, 2), 1e-3));
    }

    #[test]
    fn bareiss_determinant() {
        let m = IntegerMatrix::from_rows(&[[0, 2, 1], [1, 0, 3], [4, 1, 0]]);
        assert_eq!(m.determinant(), bi(25));
        assert_eq!(IntegerMatrix::from_rows(&[[1, 2], [2, 4]]).determinant(), bi(0));
    }
}
