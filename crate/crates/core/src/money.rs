//! Exact decimal amounts with an explicit reporting scale.
//!
//! Financial statements state amounts "in millions" or "in thousands"; an
//! amount without its scale is not a value. [`Decimal`] is a signed
//! fixed-point number (`mantissa × 10^-exponent`) so sums across components
//! are exact.

use alloc::string::{String, ToString};
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Units,
    Thousands,
    Millions,
    Billions,
}

impl Scale {
    /// Power of ten relative to units.
    pub fn power(self) -> u32 {
        match self {
            Scale::Units => 0,
            Scale::Thousands => 3,
            Scale::Millions => 6,
            Scale::Billions => 9,
        }
    }

    pub fn word(self) -> &'static str {
        match self {
            Scale::Units => "",
            Scale::Thousands => "thousand",
            Scale::Millions => "million",
            Scale::Billions => "billion",
        }
    }

    pub fn from_word(word: &str) -> Option<Scale> {
        let w = word.trim().trim_end_matches('.').to_ascii_lowercase();
        match w.as_str() {
            "thousand" | "thousands" => Some(Scale::Thousands),
            "million" | "millions" => Some(Scale::Millions),
            "billion" | "billions" => Some(Scale::Billions),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scale::Units => "units",
            Scale::Thousands => "thousands",
            Scale::Millions => "millions",
            Scale::Billions => "billions",
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Signed fixed-point decimal: `mantissa × 10^(-exponent)`.
#[derive(Debug, Clone, Copy)]
pub struct Decimal {
    mantissa: i128,
    exponent: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MoneyError {
    #[error("not a number: {0:?}")]
    NotANumber(String),
    #[error("amount {0:?} carries no scale word (thousand, million, billion)")]
    MissingScale(String),
    #[error("numeric overflow")]
    Overflow,
}

const MAX_EXPONENT: u32 = 18;

impl Decimal {
    pub const ZERO: Decimal = Decimal { mantissa: 0, exponent: 0 };

    pub fn new(mantissa: i128, exponent: u32) -> Self {
        Decimal { mantissa, exponent }.normalized()
    }

    pub fn from_int(v: i64) -> Self {
        Decimal { mantissa: v as i128, exponent: 0 }
    }

    pub fn mantissa(&self) -> i128 {
        self.mantissa
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa < 0
    }

    fn normalized(mut self) -> Self {
        while self.exponent > 0 && self.mantissa % 10 == 0 {
            self.mantissa /= 10;
            self.exponent -= 1;
        }
        if self.mantissa == 0 {
            self.exponent = 0;
        }
        self
    }

    fn rescaled(&self, exponent: u32) -> Option<i128> {
        debug_assert!(exponent >= self.exponent);
        10i128
            .checked_pow(exponent - self.exponent)
            .and_then(|p| self.mantissa.checked_mul(p))
    }

    pub fn checked_add(&self, other: &Decimal) -> Option<Decimal> {
        let e = self.exponent.max(other.exponent);
        let a = self.rescaled(e)?;
        let b = other.rescaled(e)?;
        Some(Decimal { mantissa: a.checked_add(b)?, exponent: e }.normalized())
    }

    pub fn checked_sub(&self, other: &Decimal) -> Option<Decimal> {
        self.checked_add(&other.neg())
    }

    pub fn neg(&self) -> Decimal {
        Decimal { mantissa: -self.mantissa, exponent: self.exponent }
    }

    pub fn abs(&self) -> Decimal {
        Decimal { mantissa: self.mantissa.abs(), exponent: self.exponent }
    }

    /// Multiply by `10^shift` (positive) or divide (negative), exactly.
    pub fn shift(&self, shift: i32) -> Option<Decimal> {
        if shift >= 0 {
            let p = 10i128.checked_pow(shift as u32)?;
            Some(Decimal { mantissa: self.mantissa.checked_mul(p)?, exponent: self.exponent }.normalized())
        } else {
            let e = self.exponent.checked_add(shift.unsigned_abs())?;
            if e > MAX_EXPONENT + 9 {
                return None;
            }
            Some(Decimal { mantissa: self.mantissa, exponent: e }.normalized())
        }
    }

    /// `self / denominator × 100`, rounded half away from zero to `digits` decimals.
    pub fn percent_of(&self, denominator: &Decimal, digits: u32) -> Option<Decimal> {
        if denominator.is_zero() {
            return None;
        }
        let e = self.exponent.max(denominator.exponent);
        let num = self.rescaled(e)?;
        let den = denominator.rescaled(e)?;
        let factor = 10i128.checked_pow(digits + 2)?;
        let scaled = num.checked_mul(factor)?;
        let negative = (scaled < 0) != (den < 0);
        let (n, d) = (scaled.unsigned_abs(), den.unsigned_abs());
        let mut q = n / d;
        if (n % d) * 2 >= d {
            q += 1;
        }
        let q = q as i128;
        Some(Decimal::new(if negative { -q } else { q }, digits))
    }

    /// Parse a plain decimal such as `-1234.50` or `12,622`. Thousands
    /// separators are accepted between digit groups.
    pub fn parse(s: &str) -> Result<Decimal, MoneyError> {
        let t = s.trim();
        let err = || MoneyError::NotANumber(t.to_string());
        let (negative, body) = match t.strip_prefix('-').or_else(|| t.strip_prefix('\u{2212}')) {
            Some(rest) => (true, rest.trim_start()),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        if body.is_empty() {
            return Err(err());
        }
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !valid_grouping(int_part) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        if frac_part.len() as u32 > MAX_EXPONENT {
            return Err(MoneyError::Overflow);
        }
        let mut mantissa: i128 = 0;
        for b in int_part.bytes().chain(frac_part.bytes()).filter(|b| b.is_ascii_digit()) {
            mantissa = mantissa
                .checked_mul(10)
                .and_then(|m| m.checked_add((b - b'0') as i128))
                .ok_or(MoneyError::Overflow)?;
        }
        if negative {
            mantissa = -mantissa;
        }
        Ok(Decimal { mantissa, exponent: frac_part.len() as u32 }.normalized())
    }

    /// Render with thousands separators, e.g. `34,551` or `-1,234.5`.
    /// Plain rendering padded to exactly `digits` decimals, such as `97.0`.
    /// Values with more precision than `digits` keep their extra digits.
    pub fn to_fixed(&self, digits: u32) -> String {
        let mut s = self.to_string();
        if self.exponent >= digits {
            return s;
        }
        if self.exponent == 0 {
            s.push('.');
        }
        for _ in self.exponent..digits {
            s.push('0');
        }
        s
    }

    pub fn to_grouped_string(&self) -> String {
        let plain = self.abs().to_string();
        let (int_part, frac_part) = match plain.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (plain.as_str(), None),
        };
        let mut out = String::new();
        if self.is_negative() {
            out.push('-');
        }
        let digits = int_part.as_bytes();
        for (i, d) in digits.iter().enumerate() {
            if i > 0 && (digits.len() - i) % 3 == 0 {
                out.push(',');
            }
            out.push(*d as char);
        }
        if let Some(f) = frac_part {
            out.push('.');
            out.push_str(f);
        }
        out
    }
}

fn valid_grouping(int_part: &str) -> bool {
    if int_part.is_empty() {
        return true;
    }
    if !int_part.contains(',') {
        return int_part.bytes().all(|b| b.is_ascii_digit());
    }
    let groups: alloc::vec::Vec<&str> = int_part.split(',').collect();
    let first = groups[0];
    if first.is_empty() || first.len() > 3 || !first.bytes().all(|b| b.is_ascii_digit()) {
        return false;
    }
    groups[1..]
        .iter()
        .all(|g| g.len() == 3 && g.bytes().all(|b| b.is_ascii_digit()))
}

impl PartialEq for Decimal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Decimal {}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exponent.max(other.exponent);
        match (self.rescaled(e), other.rescaled(e)) {
            (Some(a), Some(b)) => a.cmp(&b),
            // Overflow only happens for absurd magnitudes; compare signs then fall back.
            _ => self.mantissa.signum().cmp(&other.mantissa.signum()),
        }
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            return write!(f, "{}", self.mantissa);
        }
        let sign = if self.mantissa < 0 { "-" } else { "" };
        let digits = self.mantissa.unsigned_abs().to_string();
        let e = self.exponent as usize;
        if digits.len() <= e {
            write!(f, "{sign}0.")?;
            for _ in 0..(e - digits.len()) {
                f.write_str("0")?;
            }
            write!(f, "{digits}")
        } else {
            let (i, frac) = digits.split_at(digits.len() - e);
            write!(f, "{sign}{i}.{frac}")
        }
    }
}

impl Serialize for Decimal {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Decimal::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// An amount together with the scale it is stated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonetaryValue {
    pub value: Decimal,
    pub scale: Scale,
}

impl MonetaryValue {
    pub fn new(value: Decimal, scale: Scale) -> Self {
        MonetaryValue { value, scale }
    }

    /// The same amount expressed at `target` scale; exact.
    pub fn at_scale(&self, target: Scale) -> Option<Decimal> {
        let shift = self.scale.power() as i32 - target.power() as i32;
        self.value.shift(shift)
    }

    /// Parse a model answer such as `$391,035 million`, `(1,234) thousand`
    /// or `-$2.5 billion`. The scale word is mandatory.
    pub fn parse_answer(answer: &str) -> Result<MonetaryValue, MoneyError> {
        let original = answer.trim();
        let mut s = original.trim_end_matches('.').trim();
        let mut negative = false;
        if let Some(rest) = s.strip_prefix('-').or_else(|| s.strip_prefix('\u{2212}')) {
            negative = true;
            s = rest.trim_start();
        }
        let mut parts = s.split_whitespace();
        let amount = parts.next().ok_or_else(|| MoneyError::NotANumber(original.to_string()))?;
        let rest: alloc::vec::Vec<&str> = parts.collect();
        let scale_word = rest.iter().find_map(|w| Scale::from_word(w));
        let trailing_ok = rest.iter().all(|w| {
            Scale::from_word(w).is_some() || matches!(w.to_ascii_uppercase().as_str(), "USD" | "DOLLARS" | "U.S." | "US")
        });
        if !trailing_ok {
            return Err(MoneyError::NotANumber(original.to_string()));
        }
        let (paren_negative, value) = parse_amount_token(amount)
            .ok_or_else(|| MoneyError::NotANumber(original.to_string()))?;
        let scale = scale_word.ok_or_else(|| MoneyError::MissingScale(original.to_string()))?;
        let value = if negative ^ paren_negative { value.neg() } else { value };
        Ok(MonetaryValue { value, scale })
    }

    /// Canonical answer rendering, e.g. `$391,035 million`.
    pub fn to_answer_string(&self) -> String {
        let mut s = String::new();
        if self.value.is_negative() {
            s.push('-');
        }
        s.push('$');
        s.push_str(&self.value.abs().to_grouped_string());
        if self.scale != Scale::Units {
            s.push(' ');
            s.push_str(self.scale.word());
        }
        s
    }
}

/// `$1,234`, `(1,234)`, `($1,234)`, `$(1,234)` → (parenthesized, magnitude).
fn parse_amount_token(token: &str) -> Option<(bool, Decimal)> {
    let mut t = token.trim();
    let mut parenthesized = false;
    if let Some(inner) = t.strip_prefix('(').and_then(|x| x.strip_suffix(')')) {
        parenthesized = true;
        t = inner.trim();
    }
    t = t.strip_prefix("US$").or_else(|| t.strip_prefix('$')).unwrap_or(t).trim();
    if let Some(inner) = t.strip_prefix('(').and_then(|x| x.strip_suffix(')')) {
        if parenthesized {
            return None;
        }
        parenthesized = true;
        t = inner.trim();
    }
    if t.starts_with('-') || t.starts_with('+') {
        return None;
    }
    Decimal::parse(t).ok().map(|d| (parenthesized, d))
}

/// Numeric content of a table cell: `1,234`, `(1,234)`, `$ 12.5`. Returns
/// `None` for text, dashes, blanks and percentages.
pub fn parse_cell(cell: &str) -> Option<Decimal> {
    let t = cell.trim();
    if t.is_empty() || t.ends_with('%') {
        return None;
    }
    let compact: String = t.chars().filter(|c| !c.is_whitespace()).collect();
    let (neg, value) = parse_amount_token(&compact).or_else(|| {
        compact
            .strip_prefix('-')
            .and_then(|rest| parse_amount_token(rest).map(|(p, d)| (!p, d)))
            .filter(|(p, _)| *p)
    })?;
    Some(if neg { value.neg() } else { value })
}

/// Renders a cell value in financial-table style: negatives in parentheses
/// and thousands separators.
pub fn render_cell(value: &Decimal) -> String {
    if value.is_negative() {
        let mut s = String::from("(");
        s.push_str(&value.abs().to_grouped_string());
        s.push(')');
        s
    } else {
        value.to_grouped_string()
    }
}
