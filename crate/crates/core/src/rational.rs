//! Exact rational values, the `+∞`-extended ratio type used in minimum
//! comparisons, and the string wire format (`"p/q"` or `"p"`).

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::ParseError;

/// Arbitrary-precision fraction, always kept in lowest terms with a
/// positive denominator.
pub type Rational = num_rational::BigRational;

/// Builds `num/den` from machine integers. Panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Parses `"p/q"` or `"p"`. Decimal and exponent notations are rejected so
/// that no binary floating-point value can sneak into an instance.
pub fn parse_rational(text: &str) -> Result<Rational, ParseError> {
    let trimmed = text.trim();
    if trimmed.contains(['.', 'e', 'E']) || trimmed.eq_ignore_ascii_case("nan") {
        return Err(ParseError::FloatRejected(text.to_string()));
    }
    let (num, den) = match trimmed.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (trimmed, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| ParseError::BadRational(text.to_string()))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| ParseError::BadRational(text.to_string()))?;
    if den.is_zero() {
        return Err(ParseError::ZeroDenominator(text.to_string()));
    }
    Ok(Rational::new(num, den))
}

/// Canonical wire form: `"p"` for integers, `"p/q"` otherwise.
pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// The simplest rational (smallest denominator, then smallest numerator)
/// strictly between `lo` and `hi`. Requires `0 <= lo < hi`.
///
/// Used to keep the weights chosen by the allocator small.
pub fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    assert!(lo < hi, "empty interval");
    assert!(!lo.is_negative(), "interval must be non-negative");
    let floor = lo.floor();
    let next = &floor + Rational::one();
    if next < *hi {
        return next;
    }
    // (lo, hi) sits inside [floor, floor + 1]; invert the fractional parts.
    let lo_frac = lo - &floor;
    let hi_frac = hi - &floor;
    let inverse = if lo_frac.is_zero() {
        hi_frac.recip().floor() + Rational::one()
    } else {
        simplest_between(&hi_frac.recip(), &lo_frac.recip())
    };
    floor + inverse.recip()
}

/// Ceiling of a rational as a signed integer.
pub fn ceil_to_i64(value: &Rational) -> i64 {
    let (q, r) = value.numer().div_mod_floor(value.denom());
    let q = if r.is_zero() { q } else { q + 1 };
    i64::try_from(q).expect("ceiling out of i64 range")
}

/// A non-negative ratio extended with `+∞` (a positive number divided by zero).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtRational {
    Finite(Rational),
    Infinite,
}

impl ExtRational {
    /// `numerator / denominator`, mapping a zero denominator to `+∞`.
    pub fn quotient(numerator: &Rational, denominator: &Rational) -> Self {
        if denominator.is_zero() {
            ExtRational::Infinite
        } else {
            ExtRational::Finite(numerator / denominator)
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtRational::Finite(_))
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ExtRational::Finite(v) => Some(v),
            ExtRational::Infinite => None,
        }
    }
}

impl PartialOrd for ExtRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtRational::Finite(a), ExtRational::Finite(b)) => a.cmp(b),
            (ExtRational::Finite(_), ExtRational::Infinite) => Ordering::Less,
            (ExtRational::Infinite, ExtRational::Finite(_)) => Ordering::Greater,
            (ExtRational::Infinite, ExtRational::Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ExtRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRational::Finite(v) => f.write_str(&format_rational(v)),
            ExtRational::Infinite => f.write_str("inf"),
        }
    }
}

/// Serde adapters that carry rationals as strings.
pub mod serde_str {
    use super::{format_rational, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let value = serde_json::Value::deserialize(d)?;
        super::from_json_value(&value).map_err(D::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(values: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(values.len()))?;
            for v in values {
                seq.serialize_element(&format_rational(v))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            let values = Vec::<serde_json::Value>::deserialize(d)?;
            values
                .iter()
                .map(|v| super::super::from_json_value(v).map_err(D::Error::custom))
                .collect()
        }
    }
}

/// Accepts a JSON string (`"p/q"`) or a JSON integer; JSON floats are
/// rejected.
pub fn from_json_value(value: &serde_json::Value) -> Result<Rational, ParseError> {
    match value {
        serde_json::Value::String(s) => parse_rational(s),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(int(i))
            } else if let Some(u) = n.as_u64() {
                Ok(Rational::from_integer(BigInt::from(u)))
            } else {
                Err(ParseError::FloatRejected(n.to_string()))
            }
        }
        other => Err(ParseError::BadRational(other.to_string())),
    }
}
