//! Exact currency amounts on the bidding grid.

use crate::scalar::Rational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Sub};

/// A non-negative amount expressed as a count of grid steps.
///
/// All bids, prices and values live on the grid, so settlement never
/// compares floats.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Amount(pub u64);

impl Amount {
    pub const ZERO: Amount = Amount(0);

    pub fn units(self) -> u64 {
        self.0
    }

    pub fn saturating_sub(self, other: Amount) -> Amount {
        Amount(self.0.saturating_sub(other.0))
    }

    /// Signed difference `self - other` in grid steps.
    pub fn diff(self, other: Amount) -> i64 {
        self.0 as i64 - other.0 as i64
    }
}

impl Add for Amount {
    type Output = Amount;
    fn add(self, rhs: Amount) -> Amount {
        Amount(self.0 + rhs.0)
    }
}

impl Sub for Amount {
    type Output = Amount;
    fn sub(self, rhs: Amount) -> Amount {
        Amount(self.0 - rhs.0)
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The bidding grid: how much currency one grid step is worth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    step: Rational,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { step: Rational::from_integer(1) }
    }
}

impl Grid {
    pub fn new(step: Rational) -> Result<Grid, GridError> {
        if step <= Rational::zero() {
            return Err(GridError::NonPositiveStep(step.to_string()));
        }
        Ok(Grid { step })
    }

    pub fn step(&self) -> Rational {
        self.step
    }

    pub fn step_f64(&self) -> f64 {
        *self.step.numer() as f64 / *self.step.denom() as f64
    }

    /// Currency value of an on-grid amount.
    pub fn to_currency(&self, amount: Amount) -> Rational {
        self.step * Rational::from_integer(amount.0 as i64)
    }

    /// Currency value of a signed number of grid steps.
    pub fn steps_to_currency(&self, steps: i64) -> Rational {
        self.step * Rational::from_integer(steps)
    }

    /// Exact conversion of a currency number to grid steps, if on-grid.
    pub fn from_currency(&self, value: Rational) -> Option<i64> {
        let steps = value / self.step;
        steps.is_integer().then(|| steps.to_integer())
    }

    /// Renders an amount the way a person would type it: `57`, `36.5`.
    pub fn format(&self, amount: Amount) -> String {
        format_rational(self.to_currency(amount))
    }

    /// Renders an amount in the float style used by the history lines
    /// (`86.0`, `36.5`).
    pub fn format_float(&self, amount: Amount) -> String {
        format_float(self.to_currency(amount))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("grid step must be positive, got {0}")]
    NonPositiveStep(String),
    #[error("{value} is not a multiple of the increment {increment}")]
    OffGrid { value: String, increment: String },
    #[error("{value} is outside the allowed range [{low}, {high}]")]
    OutOfRange { value: String, low: String, high: String },
    #[error("{0} is not a finite number")]
    NotFinite(String),
}

/// Checks that `value` (in currency) lies on the grid spanned by `increment`
/// and within `[low, high]`. Never rounds.
pub fn snap_check(value: Rational, increment: Rational, low: Rational, high: Rational) -> Result<Rational, GridError> {
    if increment <= Rational::zero() {
        return Err(GridError::NonPositiveStep(increment.to_string()));
    }
    if !(value / increment).is_integer() {
        return Err(GridError::OffGrid { value: format_rational(value), increment: format_rational(increment) });
    }
    if value < low || value > high {
        return Err(GridError::OutOfRange {
            value: format_rational(value),
            low: format_rational(low),
            high: format_rational(high),
        });
    }
    Ok(value)
}

/// Same as [`snap_check`] but takes and returns grid amounts for a `grid`
/// whose steps are multiples of `increment` steps.
pub fn snap_check_amount(
    grid: &Grid,
    value: Rational,
    increment: Amount,
    low: Amount,
    high: Amount,
) -> Result<Amount, GridError> {
    let checked = snap_check(value, grid.to_currency(increment), grid.to_currency(low), grid.to_currency(high))?;
    // on the increment grid, hence on the base grid
    let steps = grid.from_currency(checked).expect("increment is a whole number of steps");
    Ok(Amount(steps as u64))
}

/// Exact rational for a decimal literal such as `36.5`, `-20` or `0.1`.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let text = text.trim();
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    if digits.is_empty() {
        return None;
    }
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    // keep well inside i64
    if int_part.len() + frac_part.len() > 17 {
        return None;
    }
    let scale = 10i64.pow(frac_part.len() as u32);
    let int_val: i64 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
    let frac_val: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().ok()? };
    let numer = int_val.checked_mul(scale)?.checked_add(frac_val)?;
    let r = Rational::new(numer, scale);
    Some(if negative { -r } else { r })
}

/// Exact rational for a float taken from a config file. Uses the shortest
/// round-trip decimal so `0.1` maps to `1/10`, not its binary expansion.
pub fn rational_from_f64(x: f64) -> Result<Rational, GridError> {
    if !x.is_finite() {
        return Err(GridError::NotFinite(x.to_string()));
    }
    parse_decimal(&format!("{x}")).ok_or_else(|| GridError::NotFinite(x.to_string()))
}

/// `57`, `36.5`, `-15`; falls back to a float rendering for non-terminating
/// fractions.
pub fn format_rational(r: Rational) -> String {
    if r.is_integer() {
        return r.to_integer().to_string();
    }
    let mut denom = *r.denom();
    while denom % 2 == 0 {
        denom /= 2;
    }
    while denom % 5 == 0 {
        denom /= 5;
    }
    if denom == 1 {
        format!("{}", r.to_f64().unwrap_or(f64::NAN))
    } else {
        format!("{:.4}", r.to_f64().unwrap_or(f64::NAN))
    }
}

/// Float-style rendering: integers get a trailing `.0`.
pub fn format_float(r: Rational) -> String {
    if r.is_integer() {
        format!("{}.0", r.to_integer())
    } else {
        format!("{}", r.to_f64().unwrap_or(f64::NAN))
    }
}
