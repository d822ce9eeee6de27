//! Scalar abstraction shared by the numerical modules.
//!
//! Everything that does floating-point linear algebra is generic over [`Real`],
//! which is satisfied by `f32` and `f64`. Integer lattice work lives in
//! [`crate::intlat`] and uses arbitrary-precision integers instead.

use std::fmt::{Debug, Display};

use nalgebra::{DMatrix, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// A real floating-point scalar usable with the dense solvers in this crate.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Largest absolute entry.
pub fn max_abs<T: Real>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

/// Infinity norm (max absolute row sum).
pub fn norm_inf<T: Real>(m: &DMatrix<T>) -> T {
    m.row_iter().fold(T::zero(), |acc, row| {
        acc.max(row.iter().fold(T::zero(), |s, &x| s + x.abs()))
    })
}

/// One norm (max absolute column sum).
pub fn norm_one<T: Real>(m: &DMatrix<T>) -> T {
    m.column_iter().fold(T::zero(), |acc, col| {
        acc.max(col.iter().fold(T::zero(), |s, &x| s + x.abs()))
    })
}

/// `(m + mᵀ) / 2`.
pub fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    let half = lit::<T>(0.5);
    (m + m.transpose()) * half
}

/// Binomial coefficient; zero outside `0 <= k <= n`.
pub fn binomial(n: i64, k: i64) -> usize {
    if k < 0 || n < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}
