//! Exact edge weights and path lengths.
//!
//! Weights are fixed-point decimals with six fractional digits stored in a
//! `u64`. `u64::MAX` is reserved for infinity, which absorbs addition and
//! compares greater than every finite value.

use core::fmt;
use core::iter::Sum;
use core::ops::Add;

/// Number of raw units per 1.0.
pub const SCALE: u64 = 1_000_000;
const FRACTION_DIGITS: usize = 6;

#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cost(u64);

impl Cost {
    pub const ZERO: Cost = Cost(0);
    pub const INFINITY: Cost = Cost(u64::MAX);

    /// A whole-number weight.
    pub const fn from_units(units: u64) -> Cost {
        Cost(units * SCALE)
    }

    pub const fn from_raw(raw: u64) -> Cost {
        Cost(raw)
    }

    pub const fn raw(self) -> u64 {
        self.0
    }

    pub const fn is_finite(self) -> bool {
        self.0 != u64::MAX
    }

    pub const fn is_infinite(self) -> bool {
        self.0 == u64::MAX
    }

    pub fn checked_add(self, other: Cost) -> Option<Cost> {
        if self.is_infinite() || other.is_infinite() {
            return Some(Cost::INFINITY);
        }
        match self.0.checked_add(other.0) {
            Some(sum) if sum != u64::MAX => Some(Cost(sum)),
            _ => None,
        }
    }

    /// Parses a non-negative decimal such as `"3"`, `"2.5"` or `"0.000125"`.
    /// Returns `None` for malformed text, more than six fractional digits or
    /// values that do not fit.
    pub fn parse_decimal(text: &str) -> Option<Cost> {
        let text = text.trim();
        let (int_part, frac_part) = match text.split_once('.') {
            Some((i, f)) => (i, f),
            None => (text, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
            || frac_part.len() > FRACTION_DIGITS
        {
            return None;
        }
        let whole: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().ok()?
        };
        let mut frac: u64 = 0;
        for (i, b) in frac_part.bytes().enumerate() {
            frac += u64::from(b - b'0') * 10u64.pow((FRACTION_DIGITS - 1 - i) as u32);
        }
        let raw = whole.checked_mul(SCALE)?.checked_add(frac)?;
        if raw == u64::MAX {
            return None;
        }
        Some(Cost(raw))
    }

    /// Ratio `self / other` for reporting only.
    pub fn ratio(self, other: Cost) -> f64 {
        self.0 as f64 / other.0 as f64
    }
}

impl Add for Cost {
    type Output = Cost;

    fn add(self, other: Cost) -> Cost {
        self.checked_add(other).expect("path length overflow")
    }
}

impl Sum for Cost {
    fn sum<I: Iterator<Item = Cost>>(iter: I) -> Cost {
        iter.fold(Cost::ZERO, |acc, c| acc + c)
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            return f.write_str("inf");
        }
        let whole = self.0 / SCALE;
        let mut frac = self.0 % SCALE;
        if frac == 0 {
            return write!(f, "{whole}");
        }
        let mut digits = FRACTION_DIGITS;
        while frac % 10 == 0 {
            frac /= 10;
            digits -= 1;
        }
        write!(f, "{whole}.{frac:0digits$}")
    }
}

impl fmt::Debug for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
