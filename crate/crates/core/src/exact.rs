//! Exact rational helpers shared by every module.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// Exact rational number used for all model arithmetic.
pub type Q = BigRational;

/// Global comparison tolerance for anything evaluated in floating point.
pub const EPSILON: f64 = 1e-9;

/// `EPSILON` as an exact rational (1/10^9).
pub fn epsilon_q() -> Q {
    Q::new(BigInt::one(), BigInt::from(1_000_000_000u64))
}

pub fn int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn uint(v: u64) -> Q {
    Q::from_integer(BigInt::from(v))
}

/// Converts a finite `f64` to the rational with the same shortest decimal
/// representation, so `0.1` becomes exactly `1/10`.
pub fn from_decimal_f64(v: f64) -> Result<Q> {
    if !v.is_finite() {
        return Err(Error::Config(format!("non-finite number {v}")));
    }
    parse_decimal(&format!("{v}"))
}

/// Parses a plain decimal (`-12.375`) or a fraction (`7/3`) into a rational.
pub fn parse_decimal(s: &str) -> Result<Q> {
    let bad = || Error::Config(format!("cannot parse {s:?} as a rational number"));
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(num, den));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
    let den = num_traits::pow(BigInt::from(10u8), frac.len());
    let q = Q::new(num, den);
    Ok(if neg { -q } else { q })
}

/// Exact rational representation of a float's binary value.
pub fn from_f64_exact(v: f64) -> Q {
    Q::from_float(v).unwrap_or_else(Q::zero)
}

pub fn to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // numerator or denominator overflowed f64; divide in the log domain
        let sign = if q.is_negative() { -1.0 } else { 1.0 };
        let n = q.numer().abs();
        let d = q.denom().clone();
        let shift = n.bits().max(d.bits()).saturating_sub(1000);
        let n = (n >> shift).to_f64().unwrap_or(f64::INFINITY);
        let d = (d >> shift).to_f64().unwrap_or(f64::INFINITY);
        sign * n / d
    })
}

pub fn pow(base: &Q, exp: u32) -> Q {
    num_traits::pow(base.clone(), exp as usize)
}

pub fn binomial(n: u64, k: u64) -> Q {
    if k > n {
        return Q::zero();
    }
    Q::from_integer(num_integer::binomial(BigInt::from(n), BigInt::from(k)))
}

/// Renders a rational as `num/den` (or `num` when integral).
pub fn to_exact_string(q: &Q) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// A value that is exact when every input was rational, and a float
/// otherwise (e.g. `2^(3/2)`).
#[derive(Clone, Debug, PartialEq)]
pub enum Real {
    Exact(Q),
    Float(f64),
}

impl Real {
    /// Sums terms, staying exact only if every term is exact.
    pub fn sum<I: IntoIterator<Item = Real>>(terms: I) -> Real {
        let mut exact_acc = Some(Q::zero());
        let mut float_acc = 0.0;
        for t in terms {
            float_acc += t.to_f64();
            exact_acc = match (exact_acc, t) {
                (Some(acc), Real::Exact(q)) => Some(acc + q),
                _ => None,
            };
        }
        exact_acc.map_or(Real::Float(float_acc), Real::Exact)
    }

    pub fn scale(self, by: &Q) -> Real {
        match self {
            Real::Exact(q) => Real::Exact(q * by),
            Real::Float(v) => Real::Float(v * to_f64(by)),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Real::Exact(q) => to_f64(q),
            Real::Float(v) => *v,
        }
    }

    pub fn sub(&self, other: &Real) -> Real {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => Real::Exact(a - b),
            _ => Real::Float(self.to_f64() - other.to_f64()),
        }
    }

    /// `self > other`, exactly when both are exact and otherwise beyond the
    /// relative tolerance `EPSILON · max(1, |self|, |other|)`.
    pub fn exceeds(&self, other: &Real) -> bool {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => a > b,
            _ => {
                let (a, b) = (self.to_f64(), other.to_f64());
                a - b > EPSILON * 1f64.max(a.abs()).max(b.abs())
            }
        }
    }
}

/// Serde adapters that emit rationals as JSON numbers.
pub mod serde_f64 {
    use serde::ser::SerializeSeq;
    use serde::Serializer;

    use super::{to_f64, Q};

    pub fn serialize<S: Serializer>(q: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(to_f64(q))
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[Q], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for q in v {
                seq.serialize_element(&to_f64(q))?;
            }
            seq.end()
        }
    }

    pub mod map {
        use std::collections::BTreeMap;

        use serde::ser::SerializeMap;
        use serde::Serialize;

        use super::*;

        pub fn serialize<K: Serialize, S: Serializer>(
            m: &BTreeMap<K, Q>,
            s: S,
        ) -> Result<S::Ok, S::Error> {
            let mut map = s.serialize_map(Some(m.len()))?;
            for (k, q) in m {
                map.serialize_entry(k, &to_f64(q))?;
            }
            map.end()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(parse_decimal("0.1").unwrap(), Q::new(1.into(), 10.into()));
        assert_eq!(parse_decimal("-2.50").unwrap(), Q::new((-5).into(), 2.into()));
        assert_eq!(parse_decimal("7/3").unwrap(), Q::new(7.into(), 3.into()));
        assert_eq!(parse_decimal("12").unwrap(), int(12));
        assert!(parse_decimal("1e5").is_err());
        assert!(parse_decimal("").is_err());
        assert!(parse_decimal("3/0").is_err());
    }

    #[test]
    fn float_round_trips_through_shortest_decimal() {
        assert_eq!(from_decimal_f64(0.3).unwrap(), Q::new(3.into(), 10.into()));
        assert_eq!(from_decimal_f64(1e-7).unwrap(), Q::new(1.into(), 10_000_000.into()));
        assert!(from_decimal_f64(f64::NAN).is_err());
        assert_eq!(to_f64(&from_decimal_f64(123.456).unwrap()), 123.456);
    }

    #[test]
    fn huge_rationals_still_convert() {
        let big = Q::new(num_traits::pow(BigInt::from(3), 900), num_traits::pow(BigInt::from(2), 1400));
        let v = to_f64(&big);
        let expected = (900.0 * 3f64.ln() - 1400.0 * 2f64.ln()).exp();
        assert!((v / expected - 1.0).abs() < 1e-9, "{v} vs {expected}");
    }

    #[test]
    fn exact_string_forms() {
        assert_eq!(to_exact_string(&int(-4)), "-4");
        assert_eq!(to_exact_string(&Q::new(6.into(), 4.into())), "3/2");
    }
}
