//! Scalar abstraction shared by the probability, metric and mixing code.
//!
//! Everything that is a ratio of counts is computed in a generic `T`, so the
//! same routine yields `f64` values for reports and exact [`BigRational`]
//! values for fixture checks.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, ToPrimitive};

/// Numeric type usable for counts-derived quantities.
pub trait Scalar: Clone + Debug + PartialOrd + Num + FromPrimitive + ToPrimitive + Send + Sync {
    /// `true` when arithmetic on this type is exact.
    const EXACT: bool;

    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }

    /// Ratio of two counts; `den` must be non-zero.
    fn ratio(num: u64, den: u64) -> Self {
        Self::from_count(num) / Self::from_count(den)
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Nearest integer, ties away from zero for non-negative values.
    ///
    /// Float implementations absorb representation error up to `1e-9`
    /// (`255 * 0.7` is `178.49999999999997` in binary).
    fn round_half_up(&self) -> i64;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn round_half_up(&self) -> i64 {
        (self + 0.5 + 1e-9).floor() as i64
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn round_half_up(&self) -> i64 {
        (f64::from(*self) + 0.5 + 1e-6).floor() as i64
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn round_half_up(&self) -> i64 {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        (self + half)
            .floor()
            .to_integer()
            .to_i64()
            .expect("rounded value fits in i64")
    }
}

/// `1 - x` without requiring `Sub<&T>`.
pub(crate) fn one_minus<T: Scalar>(x: &T) -> T {
    T::one() - x.clone()
}

/// Floor of `x` with a small guard against binary representation error,
/// so that e.g. `0.29 * 100` yields 29 and not 28.
pub(crate) fn floor_guarded(x: f64) -> usize {
    (x + 1e-9).floor().max(0.0) as usize
}

/// Half-up rounding with the same guard as [`floor_guarded`].
pub(crate) fn round_guarded(x: f64) -> usize {
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    #[test]
    fn half_up_rounding_survives_binary_error() {
        assert_eq!((0.3 * 0.0 + (1.0 - 0.3) * 255.0).round_half_up(), 179);
        assert_eq!(178.49999999999997_f64.round_half_up(), 179);
        assert_eq!(2.4999_f64.round_half_up(), 2);
        let exact = BigRational::new(BigInt::from(357), BigInt::from(2));
        assert_eq!(exact.round_half_up(), 179);
    }

    #[test]
    fn guarded_floor() {
        assert_eq!(floor_guarded(0.29 * 100.0), 29);
        assert_eq!(floor_guarded((1.0 - 0.8) * 49.0), 9);
        assert_eq!(floor_guarded((1.0 - 0.5) * 49.0), 24);
        assert_eq!(round_guarded((1.0 - 0.5) * 49.0), 25);
    }

    #[test]
    fn exact_ratio() {
        let r: BigRational = Scalar::ratio(50, 57);
        assert_eq!(r, BigRational::new(BigInt::from(50), BigInt::from(57)));
        assert_eq!((<BigRational as Scalar>::EXACT, <f64 as Scalar>::EXACT), (true, false));
        assert_eq!(one_minus(&r), BigRational::new(BigInt::from(7), BigInt::from(57)));
        assert!(BigRational::zero() < r);
    }
}
