use std::fmt::Debug;

use num_traits::{One, Signed, Zero};

use crate::rational::{to_f64, Rational};

/// Arithmetic the simplex needs. Exact for rationals; tolerance-based for `f64`.
pub(crate) trait Scalar: Clone + Debug {
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(r: &Rational) -> Self;
    fn is_zero(&self) -> bool;
    fn is_positive(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn is_one(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn lt(&self, other: &Self) -> bool;
    /// Size used only to pick numerically safe pivots.
    fn magnitude(&self) -> f64;
    /// `self -= a * b`
    fn sub_mul(&mut self, a: &Self, b: &Self);
    /// Rounds values that are zero up to tolerance to exact zero.
    fn flush(&mut self) {}
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn is_one(&self) -> bool {
        One::is_one(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        if One::is_one(other) {
            self.clone()
        } else if One::is_one(self) {
            other.clone()
        } else {
            self * other
        }
    }
    fn div(&self, other: &Self) -> Self {
        if One::is_one(other) {
            self.clone()
        } else {
            self / other
        }
    }
    fn lt(&self, other: &Self) -> bool {
        self < other
    }
    fn magnitude(&self) -> f64 {
        to_f64(self).abs()
    }
    fn sub_mul(&mut self, a: &Self, b: &Self) {
        if Zero::is_zero(a) || Zero::is_zero(b) {
            return;
        }
        *self -= Scalar::mul(a, b);
    }
}

pub(crate) const FLOAT_EPS: f64 = 1e-9;
const FLUSH_EPS: f64 = 1e-13;

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_rational(r: &Rational) -> Self {
        to_f64(r)
    }
    fn is_zero(&self) -> bool {
        self.abs() <= FLOAT_EPS
    }
    fn is_positive(&self) -> bool {
        *self > FLOAT_EPS
    }
    fn is_negative(&self) -> bool {
        *self < -FLOAT_EPS
    }
    fn is_one(&self) -> bool {
        *self == 1.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn lt(&self, other: &Self) -> bool {
        self < other
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn sub_mul(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }
    fn flush(&mut self) {
        if self.abs() < FLUSH_EPS {
            *self = 0.0;
        }
    }
}
