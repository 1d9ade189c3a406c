//! Structured-output contracts for model answers.
//!
//! Prompts demand bare values ("return only the extracted value") and
//! semicolon-delimited lists. Every raw answer passes through [`validate`]
//! before it may populate a bundle field; anything that does not fit its
//! declared [`AnswerShape`] is a [`ValidationError`], never a guess.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::money::{MoneyError, MonetaryValue};
use crate::text::collapse_whitespace;

/// Literal answer for information the filing does not contain.
pub const NOT_PROVIDED: &str = "Not provided";

/// Separator used for every list-shaped answer.
pub const LIST_DELIMITER: char = ';';

const MAX_SCALAR_WORDS: usize = 40;
const MAX_LIST_ITEM_CHARS: usize = 160;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerShape {
    Scalar,
    DelimitedList,
    YesNo,
    Monetary,
}

impl AnswerShape {
    /// Output-format instructions appended to every prompt of this shape.
    pub fn format_rules(self) -> &'static str {
        match self {
            AnswerShape::Scalar => {
                "Return only the extracted value, not a full sentence. If the filing does not provide this information, return exactly: Not provided"
            }
            AnswerShape::DelimitedList => {
                "Return only the names, separated by semicolons (for example: Alpha; Beta; Gamma). Do not number the items or add commentary. If there are none, return exactly: Not provided"
            }
            AnswerShape::YesNo => "Return exactly one word: Yes or No.",
            AnswerShape::Monetary => {
                "Return only the amount with a currency symbol and scale word (for example: $1,234 million). Show negative amounts in parentheses. If the amount is not disclosed, return exactly: Not provided"
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("empty answer")]
    Empty,
    #[error("expected Yes or No, got {0:?}")]
    NotYesNo(String),
    #[error("expected a semicolon-delimited list, got {0:?}")]
    NotDelimited(String),
    #[error("expected a bare value, got a sentence or multi-line text: {0:?}")]
    NotScalar(String),
    #[error("unparseable monetary value: {0}")]
    Monetary(MoneyError),
    #[error("{0}")]
    Other(String),
}

/// A validated answer. `warnings` carries non-fatal format deviations that
/// were repaired (trailing delimiters, duplicates).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    NotProvided,
    Scalar(String),
    YesNo(bool),
    List { items: Vec<String>, warnings: Vec<String> },
    Monetary(MonetaryValue),
}

impl Answer {
    pub fn is_not_provided(&self) -> bool {
        matches!(self, Answer::NotProvided)
    }
}

fn is_not_provided(s: &str) -> bool {
    let t = s.trim().trim_end_matches('.');
    t.eq_ignore_ascii_case(NOT_PROVIDED)
}

pub fn validate(shape: AnswerShape, raw: &str) -> Result<Answer, ValidationError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(ValidationError::Empty);
    }
    if is_not_provided(trimmed) {
        return Ok(Answer::NotProvided);
    }
    match shape {
        AnswerShape::Scalar => validate_scalar(trimmed).map(Answer::Scalar),
        AnswerShape::YesNo => parse_yes_no(trimmed).map(Answer::YesNo),
        AnswerShape::DelimitedList => {
            parse_list(trimmed).map(|(items, warnings)| Answer::List { items, warnings })
        }
        AnswerShape::Monetary => MonetaryValue::parse_answer(trimmed)
            .map(Answer::Monetary)
            .map_err(ValidationError::Monetary),
    }
}

fn validate_scalar(s: &str) -> Result<String, ValidationError> {
    if s.contains('\n') || s.split_whitespace().count() > MAX_SCALAR_WORDS {
        return Err(ValidationError::NotScalar(s.to_string()));
    }
    Ok(collapse_whitespace(s))
}

pub fn parse_yes_no(s: &str) -> Result<bool, ValidationError> {
    let t = s.trim().trim_end_matches(['.', '!']).trim();
    if t.eq_ignore_ascii_case("yes") {
        Ok(true)
    } else if t.eq_ignore_ascii_case("no") {
        Ok(false)
    } else {
        Err(ValidationError::NotYesNo(s.to_string()))
    }
}

fn looks_enumerated(line: &str) -> bool {
    let l = line.trim_start();
    if l.starts_with(['-', '*', '\u{2022}']) {
        return true;
    }
    let digits = l.bytes().take_while(|b| b.is_ascii_digit()).count();
    digits > 0 && matches!(l.as_bytes().get(digits), Some(b'.') | Some(b')'))
}

/// Splits a semicolon-delimited list, dropping empty items (with a warning)
/// and keeping the first of any duplicate names (case-insensitive).
pub fn parse_list(s: &str) -> Result<(Vec<String>, Vec<String>), ValidationError> {
    let t = s.trim();
    if t.lines().filter(|l| !l.trim().is_empty()).count() > 1 || looks_enumerated(t) {
        return Err(ValidationError::NotDelimited(t.to_string()));
    }
    let mut items: Vec<String> = Vec::new();
    let mut warnings = Vec::new();
    let pieces: Vec<&str> = t.split(LIST_DELIMITER).collect();
    for (i, piece) in pieces.iter().enumerate() {
        let item = collapse_whitespace(piece);
        if item.is_empty() {
            if i + 1 == pieces.len() {
                warnings.push("trailing list delimiter ignored".to_string());
            } else {
                warnings.push(alloc::format!("empty list item at position {} ignored", i + 1));
            }
            continue;
        }
        if item.chars().count() > MAX_LIST_ITEM_CHARS {
            return Err(ValidationError::NotDelimited(t.to_string()));
        }
        if items.iter().any(|seen| seen.eq_ignore_ascii_case(&item)) {
            warnings.push(alloc::format!("duplicate list item {item:?} ignored (first occurrence kept)"));
            continue;
        }
        items.push(item);
    }
    if items.is_empty() {
        return Err(ValidationError::NotDelimited(t.to_string()));
    }
    Ok((items, warnings))
}
