//! Scalar modes: exact complex rationals and machine-precision complex floats.
//!
//! Both modes implement [`Scalar`], so every contraction in the crate is written
//! once and instantiated twice. Exact mode never rounds; it is the mode used for
//! sign decisions on word traces.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Complex number with arbitrary-precision rational parts.
pub type Exact = Complex<BigRational>;
/// Complex double.
pub type C64 = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMode {
    #[serde(rename = "rational")]
    Exact,
    Float,
}

impl std::fmt::Display for ScalarMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScalarMode::Exact => f.write_str("rational"),
            ScalarMode::Float => f.write_str("float"),
        }
    }
}

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const MODE: ScalarMode;

    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_i64(v: i64) -> Self;
    /// Exact mode converts the binary value of each part without rounding.
    fn from_c64(v: C64) -> Self;
    fn to_c64(&self) -> C64;
    fn conj(&self) -> Self;
    fn mul_ref(&self, rhs: &Self) -> Self;
    fn add_assign_ref(&mut self, rhs: &Self);
    /// Real part as a scalar of the same mode.
    fn re_part(&self) -> Self;
    fn abs_sqr(&self) -> Self {
        self.mul_ref(&self.conj()).re_part()
    }
    /// `true` when the real part is strictly below zero.
    fn re_negative(&self) -> bool;
    /// `true` when the imaginary part is exactly zero (exact) or tiny relative to `scale`.
    fn is_real(&self, scale: f64) -> bool;
    /// Zero test: exact in exact mode, `|x| <= tol * scale` in float mode.
    fn is_negligible(&self, tol: f64, scale: f64) -> bool;
    /// Equality test; `tol` is a relative tolerance ignored in exact mode.
    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let diff = self.clone() - other.clone();
        let scale = self.to_c64().norm().max(other.to_c64().norm());
        diff.is_negligible(tol, scale)
    }
    /// Divides the matrix data by a power of two when its magnitude drifts far
    /// from one, returning the natural log of the factor removed. Exact mode
    /// never rescales.
    fn rescale(_data: &mut [Self]) -> f64 {
        0.0
    }
}

impl Scalar for C64 {
    const MODE: ScalarMode = ScalarMode::Float;

    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn from_i64(v: i64) -> Self {
        C64::new(v as f64, 0.0)
    }
    fn from_c64(v: C64) -> Self {
        v
    }
    fn to_c64(&self) -> C64 {
        *self
    }
    fn conj(&self) -> Self {
        Complex::conj(self)
    }
    fn mul_ref(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn add_assign_ref(&mut self, rhs: &Self) {
        *self += rhs;
    }
    fn re_part(&self) -> Self {
        C64::new(self.re, 0.0)
    }
    fn abs_sqr(&self) -> Self {
        C64::new(self.norm_sqr(), 0.0)
    }
    fn re_negative(&self) -> bool {
        self.re < 0.0
    }
    fn is_real(&self, scale: f64) -> bool {
        self.im.abs() <= 1e-9 * scale.max(f64::MIN_POSITIVE)
    }
    fn is_negligible(&self, tol: f64, scale: f64) -> bool {
        self.norm() <= tol * scale
    }
    fn rescale(data: &mut [Self]) -> f64 {
        let max = data
            .iter()
            .map(|z| z.re.abs().max(z.im.abs()))
            .fold(0.0, f64::max);
        if max == 0.0 || (1e-100..=1e100).contains(&max) {
            return 0.0;
        }
        let exp = max.log2().round() as i32;
        let factor = 2f64.powi(-exp);
        for z in data.iter_mut() {
            *z *= factor;
        }
        exp as f64 * std::f64::consts::LN_2
    }
}

impl Scalar for Exact {
    const MODE: ScalarMode = ScalarMode::Exact;

    fn zero() -> Self {
        <Exact as Zero>::zero()
    }
    fn one() -> Self {
        <Exact as One>::one()
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn from_i64(v: i64) -> Self {
        Exact::new(BigRational::from_integer(BigInt::from(v)), BigRational::zero())
    }
    fn from_c64(v: C64) -> Self {
        Exact::new(rational_from_f64(v.re), rational_from_f64(v.im))
    }
    fn to_c64(&self) -> C64 {
        C64::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }
    fn conj(&self) -> Self {
        Exact::new(self.re.clone(), -self.im.clone())
    }
    fn mul_ref(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn add_assign_ref(&mut self, rhs: &Self) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
    fn re_part(&self) -> Self {
        Exact::new(self.re.clone(), BigRational::zero())
    }
    fn re_negative(&self) -> bool {
        self.re.is_negative()
    }
    fn is_real(&self, _scale: f64) -> bool {
        self.im.is_zero()
    }
    fn is_negligible(&self, _tol: f64, _scale: f64) -> bool {
        Scalar::is_zero(self)
    }
    fn approx_eq(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
}

/// Exact rational value of a finite float.
pub fn rational_from_f64(x: f64) -> BigRational {
    // Non-finite inputs are rejected at parse time; map them to zero here.
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Huge numerator/denominator pairs: fall back on a ratio of logs.
        let (n, d) = (q.numer(), q.denom());
        if n.is_zero() {
            return 0.0;
        }
        let bits = n.bits() as i64 - d.bits() as i64;
        let shift = bits - 52;
        let scaled = if shift > 0 {
            BigRational::new(n.clone(), d.clone() << (shift as usize))
        } else {
            BigRational::new(n.clone() << ((-shift) as usize), d.clone())
        };
        scaled.to_f64().unwrap_or(0.0) * 2f64.powi(shift as i32)
    })
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn exact_real(num: i64, den: i64) -> Exact {
    Exact::new(rational(num, den), BigRational::zero())
}

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_roundtrips_floats() {
        let x = c64(0.1, -3.25);
        assert_eq!(Exact::from_c64(x).to_c64(), x);
    }

    #[test]
    fn huge_rationals_convert() {
        let big = BigRational::from_integer(BigInt::from(3).pow(700));
        let f = rational_to_f64(&big);
        assert!(f.is_infinite() || f > 1e300);
        let ratio = BigRational::new(BigInt::from(3).pow(700) + 1, BigInt::from(3).pow(700));
        assert!((rational_to_f64(&ratio) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn float_rescale_tracks_log() {
        let mut data = vec![c64(1e120, 0.0), c64(-2e119, 1.0)];
        let log = C64::rescale(&mut data);
        let restored = data[0].re * log.exp();
        assert!((restored / 1e120 - 1.0).abs() < 1e-12);
        let mut small = vec![c64(3.0, 0.0)];
        assert_eq!(C64::rescale(&mut small), 0.0);
    }
}
