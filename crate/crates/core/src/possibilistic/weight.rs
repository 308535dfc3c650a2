//! Necessity weights on a fixed four-digit decimal scale.
//!
//! A [`Weight`] is a lower bound of a necessity measure in `(0, 1]`. Values are
//! stored as integer ten-thousandths so that ordering and equality are exact;
//! nothing in the crate ever compares weights through floating point.
//!
//! Zero support is not a weight. Operations that may find no support return
//! [`Degree`], an `Option<Weight>` where `None` plays the role of zero.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Number of fractional digits kept by a [`Weight`].
pub const SCALE_DIGITS: u32 = 4;
/// Units per 1.0.
pub const SCALE: u32 = 10_000;

/// A necessity lower bound in `(0, 1]` with four fractional digits.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Weight(u16);

/// A weight or the absence of support ("zero").
pub type Degree = Option<Weight>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeightError {
    #[error("weight `{0}` is not a decimal number")]
    Syntax(String),
    #[error("weight `{0}` has more than {SCALE_DIGITS} fractional digits")]
    Precision(String),
    #[error("weight `{0}` is outside (0, 1]")]
    Range(String),
}

impl Weight {
    pub const ONE: Weight = Weight(SCALE as u16);
    /// Smallest representable weight, 0.0001.
    pub const MIN: Weight = Weight(1);

    /// Builds a weight from ten-thousandths; `None` unless `1 <= units <= 10000`.
    pub const fn from_units(units: u32) -> Option<Weight> {
        if units == 0 || units > SCALE {
            None
        } else {
            Some(Weight(units as u16))
        }
    }

    /// Like [`Weight::from_units`] but panics on out-of-range input. Intended for constants.
    pub const fn units_unchecked(units: u32) -> Weight {
        match Weight::from_units(units) {
            Some(w) => w,
            None => panic!("weight units out of range"),
        }
    }

    pub const fn units(self) -> u32 {
        self.0 as u32
    }

    /// Rounds `num / den` half-up to the weight scale. Returns `None` when the
    /// rounded value is zero. Values above one are clamped to one.
    pub fn from_ratio(num: u64, den: u64) -> Degree {
        assert!(den > 0, "ratio with zero denominator");
        let scaled = (num as u128 * SCALE as u128 * 2 + den as u128) / (den as u128 * 2);
        let units = scaled.min(SCALE as u128) as u32;
        Weight::from_units(units)
    }

    pub fn min(self, other: Weight) -> Weight {
        std::cmp::min(self, other)
    }

    pub fn max(self, other: Weight) -> Weight {
        std::cmp::max(self, other)
    }
}

impl fmt::Display for Weight {
    /// Shortest decimal rendering with at least one fractional digit: `1.0`, `0.6`, `0.6667`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let units = self.0 as u32;
        let int = units / SCALE;
        let mut frac = format!("{:04}", units % SCALE);
        while frac.len() > 1 && frac.ends_with('0') {
            frac.pop();
        }
        write!(f, "{int}.{frac}")
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Weight {
    type Err = WeightError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = || WeightError::Syntax(s.to_string());
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(syntax());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(syntax());
        }
        if frac_part.len() > SCALE_DIGITS as usize {
            return Err(WeightError::Precision(s.to_string()));
        }
        let int: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| WeightError::Range(s.to_string()))?
        };
        let mut frac: u64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| syntax())?
        };
        for _ in frac_part.len()..SCALE_DIGITS as usize {
            frac *= 10;
        }
        let units = int
            .checked_mul(SCALE as u64)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(|| WeightError::Range(s.to_string()))?;
        if units > SCALE as u64 {
            return Err(WeightError::Range(s.to_string()));
        }
        Weight::from_units(units as u32).ok_or_else(|| WeightError::Range(s.to_string()))
    }
}

/// Renders a degree, printing `0` for the absence of support.
pub fn degree_to_string(d: Degree) -> String {
    match d {
        Some(w) => w.to_string(),
        None => "0".to_string(),
    }
}

/// Parses a degree written by [`degree_to_string`].
pub fn parse_degree(s: &str) -> Result<Degree, WeightError> {
    if s == "0" || s.bytes().all(|b| b == b'0' || b == b'.') && s.contains('0') {
        return Ok(None);
    }
    s.parse().map(Some)
}

/// The inner `min` of the possibilistic update rule: the support a justification gives its
/// consequent is the weakest of its premises and its own weight.
pub fn combine_support(premise_degrees: &[Weight], justification_degree: Weight) -> Result<Weight, EmptyPremises> {
    if premise_degrees.is_empty() {
        return Err(EmptyPremises);
    }
    Ok(premise_degrees.iter().copied().fold(justification_degree, Weight::min))
}

/// The outer `max` of the update rule: a new derivation can only raise a degree.
pub fn merge_degree(existing: Degree, candidate: Weight) -> Weight {
    match existing {
        Some(e) => e.max(candidate),
        None => candidate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("combine_support needs at least one premise degree")]
pub struct EmptyPremises;
