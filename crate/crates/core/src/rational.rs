//! Exact rational numbers for every DoF quantity and slot ratio.
//!
//! A thin newtype over [`num_rational::BigRational`]: the numerator is an
//! arbitrary-precision signed integer, the denominator is strictly positive
//! and the pair is kept in lowest terms after every operation, so equality
//! is structural.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Significant digits used by the decimal rendering in reports.
pub const DECIMAL_DIGITS: usize = 12;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Rational(BigRational);

impl Rational {
    /// Builds `numer / denom`. Returns `None` when `denom` is zero.
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Option<Self> {
        let d = denom.into();
        if d.is_zero() {
            return None;
        }
        Some(Self(BigRational::new(numer.into(), d)))
    }

    /// `numer / denom` for small operands known to be valid.
    ///
    /// Panics if `denom == 0`.
    pub fn frac(numer: i64, denom: i64) -> Self {
        Self::new(numer, denom).expect("zero denominator")
    }

    pub fn integer(n: impl Into<BigInt>) -> Self {
        Self(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn one() -> Self {
        Self(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(Self(self.0.recip()))
        }
    }

    pub fn abs(&self) -> Self {
        Self(self.0.abs())
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// Nearest `f64`; exact for small values, correctly scaled for huge ones.
    pub fn to_f64(&self) -> f64 {
        if let (Some(n), Some(d)) = (self.numer().to_f64(), self.denom().to_f64()) {
            if n.is_finite() && d.is_finite() && d != 0.0 {
                return n / d;
            }
        }
        // Shift both operands down to 64 significant bits before dividing.
        let nb = self.numer().bits() as i64;
        let db = self.denom().bits() as i64;
        let ns = (nb - 64).max(0);
        let ds = (db - 64).max(0);
        let n = (self.numer() >> ns as usize).to_f64().unwrap_or(0.0);
        let d = (self.denom() >> ds as usize).to_f64().unwrap_or(1.0);
        n / d * 2f64.powi((ns - ds) as i32)
    }

    /// Plain (non-scientific) decimal rendering rounded half-away-from-zero
    /// to `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        assert!(digits >= 1);
        if self.is_zero() {
            return "0".to_string();
        }
        let negative = self.numer().sign() == Sign::Minus;
        let num = self.numer().abs();
        let den = self.denom().clone();
        // Decimal exponent estimate, then correct so that 10^e <= |x| < 10^(e+1).
        let mut exp = num.to_string().len() as i64 - den.to_string().len() as i64;
        let ten = BigInt::from(10u8);
        let pow10 = |e: i64| -> BigInt { num_traits::pow(ten.clone(), e as usize) };
        let ge = |e: i64| -> bool {
            // |x| >= 10^e
            if e >= 0 {
                num >= &den * pow10(e)
            } else {
                &num * pow10(-e) >= den
            }
        };
        while !ge(exp) {
            exp -= 1;
        }
        while ge(exp + 1) {
            exp += 1;
        }
        // scaled = round(|x| * 10^(digits - 1 - exp))
        let shift = digits as i64 - 1 - exp;
        let (n, d) = if shift >= 0 {
            (&num * pow10(shift), den.clone())
        } else {
            (num.clone(), &den * pow10(-shift))
        };
        let (q, r) = n.div_rem(&d);
        let mut scaled = if &r * 2u8 >= d { q + 1u8 } else { q };
        let mut shift = shift;
        if scaled.to_string().len() > digits {
            scaled /= 10u8;
            shift -= 1;
        }
        let mut digits_str = scaled.to_string();
        let out = if shift <= 0 {
            digits_str.push_str(&"0".repeat((-shift) as usize));
            digits_str
        } else {
            let shift = shift as usize;
            if digits_str.len() <= shift {
                let pad = shift - digits_str.len();
                format!("0.{}{}", "0".repeat(pad), digits_str)
            } else {
                let (int, frac) = digits_str.split_at(digits_str.len() - shift);
                format!("{int}.{frac}")
            }
        };
        let out = trim_fraction(out);
        if negative {
            format!("-{out}")
        } else {
            out
        }
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }
}

fn trim_fraction(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Self(r)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Self::integer(n)
    }
}

impl From<u64> for Rational {
    fn from(n: u64) -> Self {
        Self::integer(n)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom().is_one() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseRationalError(String);

impl FromStr for Rational {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseRationalError(s.to_string());
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.trim().parse().map_err(|_| err())?;
                let d: BigInt = d.trim().parse().map_err(|_| err())?;
                Rational::new(n, d).ok_or_else(err)
            }
            None => s
                .parse::<BigInt>()
                .map(Rational::integer)
                .map_err(|_| err()),
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl std::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

impl PartialEq<i64> for Rational {
    fn eq(&self, other: &i64) -> bool {
        self.denom().is_one() && *self.numer() == BigInt::from(*other)
    }
}

impl PartialOrd<i64> for Rational {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        self.0
            .partial_cmp(&BigRational::from_integer(BigInt::from(*other)))
    }
}

/// Serialized as `{"num": "...", "den": "...", "decimal": "..."}`. Integers
/// are strings so arbitrarily large values survive JSON round trips.
impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Rational", 3)?;
        st.serialize_field("num", &self.numer().to_string())?;
        st.serialize_field("den", &self.denom().to_string())?;
        st.serialize_field("decimal", &self.to_decimal(DECIMAL_DIGITS))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            num: String,
            den: String,
        }
        let raw = Raw::deserialize(d)?;
        let n: BigInt = raw.num.parse().map_err(serde::de::Error::custom)?;
        let den: BigInt = raw.den.parse().map_err(serde::de::Error::custom)?;
        Rational::new(n, den).ok_or_else(|| serde::de::Error::custom("zero denominator"))
    }
}
