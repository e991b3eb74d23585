//! Scalar abstractions shared by the exact and floating code paths.

use std::fmt;
use std::ops::{Add, Div, Mul};

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::Rational;

/// Default relative tolerance when comparing an exact value with a float.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

/// Bits of mantissa carried by the floating mode.
pub const FLOAT_PRECISION_BITS: u32 = f64::MANTISSA_DIGITS;

/// A field element usable as a power-series coefficient.
///
/// Implemented for `f32`, `f64` and [`Rational`].
pub trait Coefficient:
    Clone
    + Zero
    + One
    + PartialOrd
    + FromPrimitive
    + Add<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + fmt::Debug
{
}

impl<T> Coefficient for T where
    T: Clone
        + Zero
        + One
        + PartialOrd
        + FromPrimitive
        + Add<Output = T>
        + Mul<Output = T>
        + Div<Output = T>
        + fmt::Debug
{
}

/// Either an exact rational or a float tagged with its precision.
#[derive(Clone, Debug, PartialEq)]
pub enum ExactScalar {
    Exact(Rational),
    Float { value: f64, precision_bits: u32 },
}

impl ExactScalar {
    pub fn exact(value: Rational) -> Self {
        ExactScalar::Exact(value)
    }

    pub fn float(value: f64) -> Self {
        ExactScalar::Float {
            value,
            precision_bits: FLOAT_PRECISION_BITS,
        }
    }

    pub fn from_ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Self {
        ExactScalar::Exact(Rational::new(num.into(), den.into()))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ExactScalar::Exact(_))
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            ExactScalar::Exact(r) => Some(r),
            ExactScalar::Float { .. } => None,
        }
    }

    pub fn precision_bits(&self) -> Option<u32> {
        match self {
            ExactScalar::Exact(_) => None,
            ExactScalar::Float { precision_bits, .. } => Some(*precision_bits),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExactScalar::Exact(r) => rational_to_f64(r),
            ExactScalar::Float { value, .. } => *value,
        }
    }

    /// Natural logarithm, safe for rationals whose parts overflow `f64`.
    pub fn ln(&self) -> f64 {
        match self {
            ExactScalar::Exact(r) => ln_rational(r),
            ExactScalar::Float { value, .. } => value.ln(),
        }
    }

    /// Exact equality between exact values; relative comparison otherwise.
    pub fn approx_eq(&self, other: &ExactScalar, rel_tol: f64) -> bool {
        match (self, other) {
            (ExactScalar::Exact(a), ExactScalar::Exact(b)) => a == b,
            _ => {
                let (a, b) = (self.to_f64(), other.to_f64());
                if a == b {
                    return true;
                }
                let scale = a.abs().max(b.abs());
                (a - b).abs() <= rel_tol * scale
            }
        }
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactScalar::Exact(r) => write!(f, "{r}"),
            ExactScalar::Float { value, .. } => write!(f, "{value:e}"),
        }
    }
}

/// `ln x` for a positive big integer, accurate to about 1 ulp even when
/// `x` exceeds the `f64` range.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit prefix fits f64");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ln_rational(r: &Rational) -> f64 {
    if !r.is_positive() {
        return if r.is_zero() {
            f64::NEG_INFINITY
        } else {
            f64::NAN
        };
    }
    ln_biguint(r.numer().magnitude()) - ln_biguint(r.denom().magnitude())
}

/// Nearest `f64` to a rational, also for parts beyond the `f64` range.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() && (v != 0.0 || r.is_zero()) {
            return v;
        }
    }
    let sign = if r.numer().sign() == Sign::Minus {
        -1.0
    } else {
        1.0
    };
    sign * ln_rational(&r.abs()).exp()
}

pub fn rational_from_biguints(num: BigUint, den: BigUint) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}
