//! Scalar abstraction over native doubles and MPFR-backed multiprecision floats.
//!
//! Everything numerically delicate in this crate (Hankel factorizations, the
//! symmetric eigensolver, moment recursions) is written against [`Real`], so
//! the same code runs in 64-bit for quick work and at 50+ significant digits
//! when Hankel conditioning demands it.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::Float;

/// Working precision in significand bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Precision {
    bits: u32,
}

impl Precision {
    /// IEEE-754 binary64.
    pub const DOUBLE: Precision = Precision { bits: 53 };

    pub fn from_bits(bits: u32) -> Self {
        Precision { bits: bits.max(2) }
    }

    /// Smallest binary precision carrying `digits` significant decimal digits.
    pub fn from_digits(digits: u32) -> Self {
        let bits = (f64::from(digits) * std::f64::consts::LOG2_10).ceil() as u32;
        Precision::from_bits(bits)
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    /// Decimal digits represented (floor).
    pub fn digits(self) -> u32 {
        (f64::from(self.bits) / std::f64::consts::LOG2_10).floor() as u32
    }

    pub fn is_double(self) -> bool {
        self.bits <= 53
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision::DOUBLE
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} bits (~{} digits)", self.bits, self.digits())
    }
}

/// Ordered field with square root, implemented for `f64` and [`MpFloat`].
pub trait Real:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialOrd
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + 'static
{
    fn from_f64(x: f64, prec: Precision) -> Self;

    fn from_i64(x: i64, prec: Precision) -> Self;

    /// Parses a decimal string, rounding to `prec`.
    fn parse_decimal(s: &str, prec: Precision) -> Option<Self>;

    fn to_f64(&self) -> f64;

    /// Decimal rendering that parses back to the identical value at the same precision.
    fn to_decimal(&self) -> String;

    fn sqrt(&self) -> Self;

    fn abs(&self) -> Self;

    fn precision(&self) -> Precision;

    fn is_finite(&self) -> bool;

    /// Unit roundoff 2^(1-bits) at this value's precision.
    fn epsilon(&self) -> Self {
        let bits = self.precision().bits() as i64;
        let two = self.lift(2.0);
        pow_i(&two, 1 - bits)
    }

    /// Constant at the same precision as `self`.
    fn lift(&self, x: f64) -> Self {
        Self::from_f64(x, self.precision())
    }

    fn zero(prec: Precision) -> Self {
        Self::from_f64(0.0, prec)
    }

    fn one(prec: Precision) -> Self {
        Self::from_f64(1.0, prec)
    }

    fn is_zero(&self) -> bool {
        *self == self.lift(0.0)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }

    /// sqrt(a^2 + b^2) without destructive overflow.
    fn hypot(&self, other: &Self) -> Self {
        let a = self.abs();
        let b = other.abs();
        let (big, small) = if a >= b { (a, b) } else { (b, a) };
        if big.is_zero() {
            return big;
        }
        let r = small / big.clone();
        big * (self.lift(1.0) + r.clone() * r).sqrt()
    }
}

/// Integer power by repeated squaring (negative exponents invert).
pub fn pow_i<R: Real>(base: &R, exp: i64) -> R {
    let mut result = base.lift(1.0);
    let mut b = base.clone();
    let mut e = exp.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            result = result * b.clone();
        }
        b = b.clone() * b;
        e >>= 1;
    }
    if exp < 0 {
        base.lift(1.0) / result
    } else {
        result
    }
}

impl Real for f64 {
    fn from_f64(x: f64, _prec: Precision) -> Self {
        x
    }

    fn from_i64(x: i64, _prec: Precision) -> Self {
        x as f64
    }

    fn parse_decimal(s: &str, _prec: Precision) -> Option<Self> {
        s.trim().parse().ok()
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_decimal(&self) -> String {
        format!("{:e}", self)
    }

    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn precision(&self) -> Precision {
        Precision::DOUBLE
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn epsilon(&self) -> Self {
        f64::EPSILON
    }

    fn hypot(&self, other: &Self) -> Self {
        f64::hypot(*self, *other)
    }
}

/// MPFR float with round-to-nearest arithmetic.
///
/// Binary operations on operands of different precision are carried out at
/// the larger of the two.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct MpFloat(Float);

impl MpFloat {
    pub fn new(value: Float) -> Self {
        MpFloat(value)
    }

    pub fn inner(&self) -> &Float {
        &self.0
    }

    pub fn into_inner(self) -> Float {
        self.0
    }

    fn widened(mut a: Float, prec: u32) -> Float {
        if a.prec() < prec {
            a.set_prec(prec);
        }
        a
    }
}

impl fmt::Debug for MpFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MpFloat({})", self.to_decimal())
    }
}

impl fmt::Display for MpFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

macro_rules! mp_binop {
    ($tr:ident, $method:ident, $assign_tr:ident, $assign_method:ident, $op:tt) => {
        impl $tr for MpFloat {
            type Output = MpFloat;
            fn $method(self, rhs: MpFloat) -> MpFloat {
                let prec = self.0.prec().max(rhs.0.prec());
                MpFloat(MpFloat::widened(self.0, prec) $op rhs.0)
            }
        }

        impl $assign_tr for MpFloat {
            fn $assign_method(&mut self, rhs: MpFloat) {
                if self.0.prec() < rhs.0.prec() {
                    self.0.set_prec(rhs.0.prec());
                }
                let lhs = std::mem::replace(&mut self.0, Float::new(2));
                self.0 = lhs $op rhs.0;
            }
        }
    };
}

mp_binop!(Add, add, AddAssign, add_assign, +);
mp_binop!(Sub, sub, SubAssign, sub_assign, -);
mp_binop!(Mul, mul, MulAssign, mul_assign, *);
mp_binop!(Div, div, DivAssign, div_assign, /);

impl Default for MpFloat {
    fn default() -> Self {
        MpFloat(Float::new(Precision::DOUBLE.bits()))
    }
}

impl Neg for MpFloat {
    type Output = MpFloat;
    fn neg(self) -> MpFloat {
        MpFloat(-self.0)
    }
}

impl Sum for MpFloat {
    fn sum<I: Iterator<Item = MpFloat>>(iter: I) -> MpFloat {
        let mut acc: Option<MpFloat> = None;
        for x in iter {
            acc = Some(match acc {
                None => x,
                Some(a) => a + x,
            });
        }
        acc.unwrap_or_default()
    }
}

impl Real for MpFloat {
    fn from_f64(x: f64, prec: Precision) -> Self {
        MpFloat(Float::with_val(prec.bits(), x))
    }

    fn from_i64(x: i64, prec: Precision) -> Self {
        MpFloat(Float::with_val(prec.bits(), x))
    }

    fn parse_decimal(s: &str, prec: Precision) -> Option<Self> {
        let parsed = Float::parse(s.trim()).ok()?;
        Some(MpFloat(Float::with_val(prec.bits(), parsed)))
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    fn to_decimal(&self) -> String {
        if self.0.is_zero() {
            return "0".to_string();
        }
        self.0.to_string_radix(10, None)
    }

    fn sqrt(&self) -> Self {
        MpFloat(self.0.clone().sqrt())
    }

    fn abs(&self) -> Self {
        MpFloat(self.0.clone().abs())
    }

    fn precision(&self) -> Precision {
        Precision::from_bits(self.0.prec())
    }

    fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    fn hypot(&self, other: &Self) -> Self {
        let prec = self.0.prec().max(other.0.prec());
        MpFloat(MpFloat::widened(self.0.clone(), prec).hypot(&other.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digits_to_bits() {
        assert_eq!(Precision::from_digits(15).bits(), 50);
        assert!(Precision::from_digits(50).bits() >= 166);
        assert!(Precision::from_digits(50).digits() >= 50);
    }

    #[test]
    fn mp_sqrt_two_has_requested_digits() {
        let prec = Precision::from_digits(60);
        let two = MpFloat::from_f64(2.0, prec);
        let r = two.sqrt();
        let expect = "1.41421356237309504880168872420969807856967187537694807317667";
        assert!(
            r.to_decimal().starts_with(&expect[..58]),
            "{}",
            r.to_decimal()
        );
    }

    #[test]
    fn decimal_round_trip_is_exact() {
        let prec = Precision::from_digits(50);
        let third = MpFloat::one(prec) / MpFloat::from_f64(3.0, prec);
        let back = MpFloat::parse_decimal(&third.to_decimal(), prec).unwrap();
        assert_eq!(third, back);

        let x = 0.1f64 + 0.2;
        assert_eq!(
            f64::parse_decimal(&x.to_decimal(), Precision::DOUBLE),
            Some(x)
        );
    }

    #[test]
    fn mixed_precision_widens() {
        let lo = MpFloat::from_f64(1.0, Precision::DOUBLE);
        let hi = MpFloat::from_f64(3.0, Precision::from_bits(200));
        assert_eq!((lo / hi).precision().bits(), 200);
    }

    #[test]
    fn epsilon_tracks_precision() {
        assert_eq!(Real::epsilon(&1.0f64), f64::EPSILON);
        let x = MpFloat::one(Precision::from_bits(100));
        assert_eq!(x.epsilon().to_f64(), 2f64.powi(-99));
    }

    #[test]
    fn integer_powers() {
        assert_eq!(pow_i(&2.0f64, 10), 1024.0);
        assert_eq!(pow_i(&2.0f64, -2), 0.25);
        assert_eq!(pow_i(&7.0f64, 0), 1.0);
    }
}
