//! Exact rational thresholds.
//!
//! Accuracy comparisons such as `acc = β` must be decided exactly, so a
//! threshold keeps the decimal value it was written as (`0.5` is `5/10`) and
//! compares against `correct/asked` with integer cross-multiplication.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Threshold {
    num: u64,
    den: u64,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid threshold `{0}`: expected a decimal number")]
pub struct ThresholdParseError(String);

impl Threshold {
    pub const fn from_ratio(num: u64, den: u64) -> Threshold {
        Threshold { num, den }
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Compare `correct / asked` against the threshold. `asked` must be non-zero.
    pub fn compare_ratio(self, correct: u64, asked: u64) -> Ordering {
        debug_assert!(asked > 0);
        (correct as u128 * self.den as u128).cmp(&(self.num as u128 * asked as u128))
    }

    pub fn from_f64(value: f64) -> Result<Threshold, ThresholdParseError> {
        if !value.is_finite() || value < 0.0 {
            return Err(ThresholdParseError(value.to_string()));
        }
        // Shortest round-trip rendering recovers the literal the user wrote.
        format!("{value}").parse()
    }
}

impl FromStr for Threshold {
    type Err = ThresholdParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ThresholdParseError(s.to_string());
        let t = s.trim();
        let (int_part, frac_part) = match t.split_once('.') {
            Some((i, f)) => (i, f),
            None => (t, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
            || frac_part.len() > 18
        {
            return Err(err());
        }
        let den = 10u64.pow(frac_part.len() as u32);
        let int: u64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| err())? };
        let frac: u64 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|_| err())? };
        let num = int.checked_mul(den).and_then(|v| v.checked_add(frac)).ok_or_else(err)?;
        let g = gcd(num, den);
        Ok(Threshold { num: num / g, den: den / g })
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_f64())
    }
}

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Threshold::from_f64(v),
            Raw::Text(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}
