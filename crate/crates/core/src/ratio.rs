//! Exact non-negative rationals for normalized lengths and epsilon.
//!
//! Every inequality that feeds a certificate is decided by cross-multiplied
//! integer comparison in `i128`, never by floating point.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A non-negative rational with positive denominator.
///
/// Values are kept as constructed (no implicit reduction) so that e.g. a
/// normalized length keeps its defining numerator and denominator. Equality
/// and ordering compare values, so `7/7 == 1/1`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Ratio {
    pub num: i64,
    pub den: i64,
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Self) -> bool {
        self.num as i128 * other.den as i128 == other.num as i128 * self.den as i128
    }
}

impl Eq for Ratio {}

impl Ratio {
    /// Panics if `den <= 0` or `num < 0`.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den > 0, "ratio denominator must be positive");
        assert!(num >= 0, "ratio numerator must be non-negative");
        Ratio { num, den }
    }

    pub fn reduced(self) -> Self {
        if self.num == 0 {
            return Ratio { num: 0, den: 1 };
        }
        let g = gcd(self.num, self.den);
        Ratio {
            num: self.num / g,
            den: self.den / g,
        }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Strictly between 0 and 1.
    pub fn is_proper(self) -> bool {
        self.num > 0 && self.num < self.den
    }

    /// `ceil(scale / self)` as an exact integer; `self` must be positive.
    pub fn ceil_inverse_scaled(self, scale: i64) -> i64 {
        assert!(self.num > 0, "cannot invert a zero ratio");
        ceil_div(scale as i128 * self.den as i128, self.num as i128)
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = self.num as i128 * other.den as i128;
        let rhs = other.num as i128 * self.den as i128;
        lhs.cmp(&rhs)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Parses `"a/b"`, a plain integer, or a decimal literal such as `"0.25"`
/// (decimals convert exactly: `0.25 -> 25/100`, then reduce).
impl FromStr for Ratio {
    type Err = ParseRatioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let num: i64 = a.trim().parse().map_err(|_| ParseRatioError::bad(s))?;
            let den: i64 = b.trim().parse().map_err(|_| ParseRatioError::bad(s))?;
            if den <= 0 || num < 0 {
                return Err(ParseRatioError::bad(s));
            }
            return Ok(Ratio::new(num, den).reduced());
        }
        if let Some((int_part, frac_part)) = s.split_once('.') {
            let int_part = if int_part.is_empty() { "0" } else { int_part };
            let whole: i64 = int_part.parse().map_err(|_| ParseRatioError::bad(s))?;
            if whole < 0 || frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit())
            {
                return Err(ParseRatioError::bad(s));
            }
            if frac_part.len() > 15 {
                return Err(ParseRatioError::bad(s));
            }
            let frac: i64 = frac_part.parse().map_err(|_| ParseRatioError::bad(s))?;
            let den = 10i64.pow(frac_part.len() as u32);
            let num = whole
                .checked_mul(den)
                .and_then(|v| v.checked_add(frac))
                .ok_or_else(|| ParseRatioError::bad(s))?;
            return Ok(Ratio::new(num, den).reduced());
        }
        let num: i64 = s.parse().map_err(|_| ParseRatioError::bad(s))?;
        if num < 0 {
            return Err(ParseRatioError::bad(s));
        }
        Ok(Ratio::new(num, 1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid ratio literal `{literal}` (expected `a/b`, an integer, or a decimal)")]
pub struct ParseRatioError {
    pub literal: String,
}

impl ParseRatioError {
    fn bad(s: &str) -> Self {
        ParseRatioError {
            literal: s.to_string(),
        }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Ceiling division for non-negative `a` and positive `b`, exact in `i128`.
pub fn ceil_div(a: i128, b: i128) -> i64 {
    debug_assert!(a >= 0 && b > 0);
    let q = (a + b - 1) / b;
    i64::try_from(q).expect("ceil_div result exceeds i64")
}
