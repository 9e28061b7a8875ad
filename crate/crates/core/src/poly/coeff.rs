use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational numbers.
pub type Rational = BigRational;

/// Ring operations needed by the polynomial types.
///
/// The method names avoid clashing with `std::ops` so that `f64` can
/// implement the trait without ambiguity at call sites.
pub trait Coeff: Clone + Debug + PartialEq + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(n: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn plus(&self, other: &Self) -> Self;
    fn minus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;
    fn negated(&self) -> Self;
}

/// A field of numbers: exact rationals or floats.
pub trait Scalar: Coeff + PartialOrd {
    /// Whether arithmetic is exact.
    const EXACT: bool;
    fn to_f64(&self) -> f64;
    fn divide(&self, other: &Self) -> Self;
    fn abs(&self) -> Self;
}

impl Coeff for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_int(n: i64) -> Self {
        n as f64
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn negated(&self) -> Self {
        -self
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn to_f64(&self) -> f64 {
        *self
    }
    fn divide(&self, other: &Self) -> Self {
        self / other
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

impl Coeff for Rational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_int(n: i64) -> Self {
        Rational::from_integer(BigInt::from(n))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn negated(&self) -> Self {
        -self
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn divide(&self, other: &Self) -> Self {
        self / other
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
}

/// `n / d` as an exact rational. Panics if `d == 0`.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Integer as an exact rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Integer power by repeated squaring.
pub fn pow<C: Coeff>(base: &C, mut exp: u32) -> C {
    let mut acc = C::one();
    let mut b = base.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc.times(&b);
        }
        exp >>= 1;
        if exp > 0 {
            b = b.times(&b);
        }
    }
    acc
}
