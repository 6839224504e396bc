//! Scalar abstraction shared by the pure-arithmetic parts of the crate.
//!
//! Anything that only needs field operations and ordering (noisy posterior,
//! the two-point construction, exact enumeration) is written against
//! [`Scalar`], so it can run in `f32`, `f64`, or exact rationals
//! ([`Exact`]). Formulas that need `ln`/`sqrt`/`exp` use
//! [`num_traits::Float`] directly.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Arbitrary-precision rational number.
pub type Exact = Ratio<BigInt>;

pub trait Scalar:
    Num + Signed + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync
{
    /// Lossless for binary floats when `Self` is exact.
    fn lift(v: f64) -> Self {
        Self::from_f64(v).expect("finite value")
    }

    fn lower(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Spacing of the type just above 1, found by halving; exact types
    /// stop at `2^-64`.
    fn unit_roundoff() -> f64 {
        let one = Self::one();
        let mut eps = Self::one();
        for k in 0..64 {
            let half = eps.clone() * Self::half();
            if one.clone() + half.clone() == one {
                return 0.5f64.powi(k);
            }
            eps = half;
        }
        0.5f64.powi(64)
    }

    fn half() -> Self {
        Self::one() / (Self::one() + Self::one())
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    /// True when `v` lies in the closed interval; NaN fails.
    fn within(&self, lo: &Self, hi: &Self) -> bool {
        self >= lo && self <= hi
    }
}

impl<T> Scalar for T where
    T: Num + Signed + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync
{
}

/// Compensated (Kahan) summation. Exact types accumulate with zero
/// compensation, so the same code path serves both.
#[derive(Debug, Clone)]
pub struct KahanSum<T> {
    sum: T,
    carry: T,
}

impl<T: Scalar> Default for KahanSum<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> KahanSum<T> {
    pub fn new() -> Self {
        KahanSum {
            sum: T::zero(),
            carry: T::zero(),
        }
    }

    pub fn add(&mut self, v: T) {
        let y = v - self.carry.clone();
        let t = self.sum.clone() + y.clone();
        self.carry = (t.clone() - self.sum.clone()) - y;
        self.sum = t;
    }

    pub fn total(&self) -> T {
        self.sum.clone()
    }
}

impl<T: Scalar> FromIterator<T> for KahanSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}
