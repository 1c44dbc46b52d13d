//! Exact rationals for report output.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

/// A reduced `i64` fraction, serialized as `{"fraction": "p/q", "decimal": x}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactRatio(pub Ratio<i64>);

impl ExactRatio {
    pub fn new(numer: i64, denom: i64) -> Self {
        Self(Ratio::new(numer, denom))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl From<Ratio<i64>> for ExactRatio {
    fn from(r: Ratio<i64>) -> Self {
        Self(r)
    }
}

impl fmt::Display for ExactRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl Serialize for ExactRatio {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("ExactRatio", 2)?;
        s.serialize_field("fraction", &self.to_string())?;
        s.serialize_field("decimal", &self.to_f64())?;
        s.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot read {0:?} as an exact rational")]
pub struct ParseRatioError(String);

/// Parses `"p/q"`, an integer, or a plain decimal such as `"0.6838"`
/// (read exactly as 6838/10000).
impl FromStr for ExactRatio {
    type Err = ParseRatioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseRatioError(s.to_string());
        let t = s.trim();
        if let Some((p, q)) = t.split_once('/') {
            let p: i64 = p.trim().parse().map_err(|_| err())?;
            let q: i64 = q.trim().parse().map_err(|_| err())?;
            if q == 0 {
                return Err(err());
            }
            return Ok(Self::new(p, q));
        }
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(err());
        }
        if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 17 {
            return Err(err());
        }
        let denom = 10i64.checked_pow(frac.len() as u32).ok_or_else(err)?;
        let digits = format!("{int}{frac}");
        let numer: i64 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| err())? };
        Ok(Self::new(if neg { -numer } else { numer }, denom))
    }
}
