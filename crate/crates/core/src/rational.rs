//! Exact rationals and the extended nonnegative ratio type used to carry `e^ε`.
//!
//! Every probability in the crate is a [`Q`] (an arbitrary precision rational).
//! Privacy parameters are compared as ratios `R = e^ε`; logarithms only show up
//! when a report is rendered for humans.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact rational number.
pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn q_int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

/// Formats a rational as `num/den`, always including the denominator.
pub fn format_q(v: &Q) -> String {
    format!("{}/{}", v.numer(), v.denom())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {0:?} (expected `num/den` or an integer)")]
pub struct ParseRationalError(pub String);

/// Parses `num/den` or a bare integer.
pub fn parse_q(s: &str) -> Result<Q, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let t = s.trim();
    match t.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            Ok(Q::new(n, d))
        }
        None => BigInt::from_str(t).map(Q::from_integer).map_err(|_| err()),
    }
}

pub fn q_to_f64(v: &Q) -> f64 {
    use num_traits::ToPrimitive;
    v.to_f64().unwrap_or(f64::NAN)
}

/// Serde adapter storing a [`Q`] as a `"num/den"` string.
pub mod serde_q {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_q(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_q(&s).map_err(serde::de::Error::custom)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[Q], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(format_q))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
            let raw = Vec::<String>::deserialize(d)?;
            raw.iter()
                .map(|s| parse_q(s).map_err(serde::de::Error::custom))
                .collect()
        }
    }

    pub mod nested {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[Vec<Q>], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(
                v.iter()
                    .map(|row| row.iter().map(format_q).collect::<Vec<_>>()),
            )
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Q>>, D::Error> {
            let raw = Vec::<Vec<String>>::deserialize(d)?;
            raw.iter()
                .map(|row| {
                    row.iter()
                        .map(|s| parse_q(s).map_err(serde::de::Error::custom))
                        .collect()
                })
                .collect()
        }
    }

    pub mod option_vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<Vec<Q>>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => s.serialize_some(&v.iter().map(format_q).collect::<Vec<_>>()),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Q>>, D::Error> {
            let raw = Option::<Vec<String>>::deserialize(d)?;
            raw.map(|row| {
                row.iter()
                    .map(|s| parse_q(s).map_err(serde::de::Error::custom))
                    .collect()
            })
            .transpose()
        }
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<Q>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => s.serialize_some(&format_q(v)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Q>, D::Error> {
            let raw = Option::<String>::deserialize(d)?;
            raw.map(|s| parse_q(&s).map_err(serde::de::Error::custom))
                .transpose()
        }
    }
}

/// An extended nonnegative rational: either a finite value or `+∞`.
///
/// Degenerate quotients follow `0/0 = 1` and `x/0 = +∞` for `x > 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ratio {
    Finite(Q),
    Infinite,
}

impl Ratio {
    pub fn one() -> Self {
        Ratio::Finite(Q::one())
    }

    pub fn zero() -> Self {
        Ratio::Finite(Q::zero())
    }

    /// Builds `num / den` for nonnegative operands.
    pub fn from_parts(num: &Q, den: &Q) -> Self {
        debug_assert!(!num.is_negative() && !den.is_negative());
        match (num.is_zero(), den.is_zero()) {
            (true, true) => Ratio::one(),
            (false, true) => Ratio::Infinite,
            _ => Ratio::Finite(num / den),
        }
    }

    pub fn finite(v: Q) -> Self {
        Ratio::Finite(v)
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Ratio::Infinite)
    }

    pub fn as_finite(&self) -> Option<&Q> {
        match self {
            Ratio::Finite(v) => Some(v),
            Ratio::Infinite => None,
        }
    }

    pub fn recip(&self) -> Ratio {
        match self {
            Ratio::Infinite => Ratio::zero(),
            Ratio::Finite(v) if v.is_zero() => Ratio::Infinite,
            Ratio::Finite(v) => Ratio::Finite(v.recip()),
        }
    }

    /// Product with a finite nonnegative factor; `∞ · 0 = 0`.
    pub fn mul_q(&self, factor: &Q) -> Ratio {
        match self {
            Ratio::Finite(v) => Ratio::Finite(v * factor),
            Ratio::Infinite if factor.is_zero() => Ratio::zero(),
            Ratio::Infinite => Ratio::Infinite,
        }
    }

    pub fn mul(&self, other: &Ratio) -> Ratio {
        match (self, other) {
            (Ratio::Finite(a), Ratio::Finite(b)) => Ratio::Finite(a * b),
            (Ratio::Finite(a), Ratio::Infinite) | (Ratio::Infinite, Ratio::Finite(a)) => {
                if a.is_zero() {
                    Ratio::zero()
                } else {
                    Ratio::Infinite
                }
            }
            (Ratio::Infinite, Ratio::Infinite) => Ratio::Infinite,
        }
    }

    /// `R² − 1`, the forward semantic bound for a ratio `R ≥ 1`.
    pub fn squared_minus_one(&self) -> Ratio {
        match self {
            Ratio::Finite(v) => Ratio::Finite(v * v - Q::one()),
            Ratio::Infinite => Ratio::Infinite,
        }
    }

    /// `(R − 1) / (2(R + 1))`, i.e. `½ − 1/(R + 1)`; equals `½` at `R = ∞`.
    pub fn two_point_distance(&self) -> Q {
        match self {
            Ratio::Finite(v) => (v - Q::one()) / (q_int(2) * (v + Q::one())),
            Ratio::Infinite => q(1, 2),
        }
    }

    /// `ln R` for display; `+∞` for an infinite ratio.
    pub fn epsilon(&self) -> f64 {
        match self {
            Ratio::Finite(v) => q_to_f64(v).ln(),
            Ratio::Infinite => f64::INFINITY,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Ratio::Finite(v) => q_to_f64(v),
            Ratio::Infinite => f64::INFINITY,
        }
    }
}

impl From<Q> for Ratio {
    fn from(v: Q) -> Self {
        Ratio::Finite(v)
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Ratio::Finite(a), Ratio::Finite(b)) => a.cmp(b),
            (Ratio::Finite(_), Ratio::Infinite) => Ordering::Less,
            (Ratio::Infinite, Ratio::Finite(_)) => Ordering::Greater,
            (Ratio::Infinite, Ratio::Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Finite(v) => write!(f, "{}", format_q(v)),
            Ratio::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Ratio {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(Ratio::Infinite);
        }
        let v = parse_q(t)?;
        if v.is_negative() {
            return Err(ParseRationalError(s.to_string()));
        }
        Ok(Ratio::Finite(v))
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
