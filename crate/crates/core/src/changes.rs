//! Longitudinal segment-change detection and the constrained answer format
//! used to explain each change.
//!
//! Detection is a set comparison of normalized names between adjacent
//! available years. Explanations come from a model prompted with retrieved
//! context; [`parse_change_answer`] accepts only the closed reason/linkage
//! vocabularies below.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::text::collapse_whitespace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasonClass {
    InternalReorganization,
    Divestiture,
    Acquisition,
    NewSegmentAdded,
    ReportingReclassification,
    RenamingOnly,
    Unknown,
}

impl ReasonClass {
    pub const ALL: [ReasonClass; 7] = [
        ReasonClass::InternalReorganization,
        ReasonClass::Divestiture,
        ReasonClass::Acquisition,
        ReasonClass::NewSegmentAdded,
        ReasonClass::ReportingReclassification,
        ReasonClass::RenamingOnly,
        ReasonClass::Unknown,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            ReasonClass::InternalReorganization => "internal_reorganization",
            ReasonClass::Divestiture => "divestiture",
            ReasonClass::Acquisition => "acquisition",
            ReasonClass::NewSegmentAdded => "new_segment_added",
            ReasonClass::ReportingReclassification => "reporting_reclassification",
            ReasonClass::RenamingOnly => "renaming_only",
            ReasonClass::Unknown => "unknown",
        }
    }

    pub fn from_keyword(s: &str) -> Option<ReasonClass> {
        let k = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        ReasonClass::ALL.into_iter().find(|r| r.keyword() == k)
    }
}

impl fmt::Display for ReasonClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkageClass {
    Continuation,
    Merged,
    Split,
    Added,
    Discontinued,
    Regrouped,
    Partial,
}

impl LinkageClass {
    pub const ALL: [LinkageClass; 7] = [
        LinkageClass::Continuation,
        LinkageClass::Merged,
        LinkageClass::Split,
        LinkageClass::Added,
        LinkageClass::Discontinued,
        LinkageClass::Regrouped,
        LinkageClass::Partial,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            LinkageClass::Continuation => "continuation",
            LinkageClass::Merged => "merged",
            LinkageClass::Split => "split",
            LinkageClass::Added => "added",
            LinkageClass::Discontinued => "discontinued",
            LinkageClass::Regrouped => "regrouped",
            LinkageClass::Partial => "partial",
        }
    }

    pub fn from_keyword(s: &str) -> Option<LinkageClass> {
        let k = s.trim().to_ascii_lowercase();
        LinkageClass::ALL.into_iter().find(|l| l.keyword() == k)
    }

    /// Word used in the rendered "Linked with Prior Segment?" column.
    pub fn label(self) -> &'static str {
        match self {
            LinkageClass::Continuation => "Yes",
            LinkageClass::Merged => "Merged",
            LinkageClass::Split => "Split",
            LinkageClass::Added => "Added",
            LinkageClass::Discontinued => "Discontinued",
            LinkageClass::Regrouped => "Yes (re-grouping)",
            LinkageClass::Partial => "Partial",
        }
    }
}

impl fmt::Display for LinkageClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// One mapping entry: prior-year segments flowing into a current-year
/// segment. `prior` empty means the segment was added; `current` `None`
/// means the prior segments were discontinued.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentLink {
    pub prior: Vec<String>,
    pub current: Option<String>,
}

impl SegmentLink {
    /// Relation implied by the entry's shape.
    pub fn relation(&self, all_links: &[SegmentLink]) -> LinkageClass {
        match (self.prior.len(), &self.current) {
            (0, Some(_)) => LinkageClass::Added,
            (_, None) => LinkageClass::Discontinued,
            (1, Some(_)) => {
                let p = &self.prior[0];
                let fanout = all_links.iter().filter(|l| l.current.is_some() && l.prior.contains(p)).count();
                if fanout > 1 {
                    LinkageClass::Split
                } else {
                    LinkageClass::Continuation
                }
            }
            _ => LinkageClass::Merged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeRow {
    pub fiscal_year: i32,
    pub segment_names: Vec<String>,
    pub changed: bool,
    pub reason: Option<ReasonClass>,
    pub reason_text: String,
    pub linkage: Option<LinkageClass>,
    pub linkage_text: String,
    #[serde(default)]
    pub mapping: Vec<SegmentLink>,
    /// Chunk ids backing the explanation.
    #[serde(default)]
    pub evidence: Vec<String>,
}

impl ChangeRow {
    pub fn unexplained(fiscal_year: i32, segment_names: Vec<String>, changed: bool) -> ChangeRow {
        ChangeRow {
            fiscal_year,
            segment_names,
            changed,
            reason: None,
            reason_text: String::new(),
            linkage: None,
            linkage_text: String::new(),
            mapping: Vec::new(),
            evidence: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Detection {
    pub rows: Vec<ChangeRow>,
    /// `(previous, next)` for every pair of adjacent available years that
    /// are not consecutive.
    pub gaps: Vec<(i32, i32)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DetectError {
    #[error("years must be strictly ascending (saw {previous} then {next})")]
    NotAscending { previous: i32, next: i32 },
}

/// Canonical form of a segment name: lowercase, `&` read as "and",
/// punctuation dropped, connective words removed, whitespace collapsed.
pub fn normalize_name(name: &str) -> String {
    let lowered = name.to_lowercase().replace('&', " and ");
    let cleaned: String = lowered
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    let words: Vec<&str> = cleaned
        .split_whitespace()
        .filter(|w| !matches!(*w, "and" | "the" | "of"))
        .collect();
    collapse_whitespace(&words.join(" "))
}

/// Initials of a name's significant words: "Label and Graphic Materials" →
/// "LGM", "Pressure-sensitive Materials" → "PSM".
pub fn acronym(name: &str) -> String {
    normalize_name(name)
        .split_whitespace()
        .filter_map(|w| w.chars().next())
        .flat_map(char::to_uppercase)
        .collect()
}

/// Resolves a name, abbreviation or near-spelling from a model answer to
/// one of `candidates`.
pub fn resolve_name<'a>(mention: &str, candidates: &'a [String]) -> Option<&'a str> {
    let norm = normalize_name(mention);
    if norm.is_empty() {
        return None;
    }
    if let Some(c) = candidates.iter().find(|c| normalize_name(c) == norm) {
        return Some(c);
    }
    let compact: String = mention.chars().filter(|c| c.is_alphanumeric()).collect();
    if compact.len() >= 2 && compact.chars().all(|c| c.is_uppercase()) {
        let hits: Vec<&String> = candidates.iter().filter(|c| acronym(c) == compact).collect();
        if hits.len() == 1 {
            return Some(hits[0]);
        }
    }
    None
}

fn name_set(names: &[String]) -> BTreeSet<String> {
    names.iter().map(|n| normalize_name(n)).collect()
}

/// Flags year `y` as changed when its normalized name set differs from the
/// previous available year's. The first year is never changed.
pub fn detect_changes(panel: &[(i32, Vec<String>)]) -> Result<Detection, DetectError> {
    let mut rows = Vec::with_capacity(panel.len());
    let mut gaps = Vec::new();
    for (i, (year, names)) in panel.iter().enumerate() {
        let changed = match i.checked_sub(1).map(|j| &panel[j]) {
            None => false,
            Some((prev_year, prev_names)) => {
                if year <= prev_year {
                    return Err(DetectError::NotAscending { previous: *prev_year, next: *year });
                }
                if *year != prev_year + 1 {
                    gaps.push((*prev_year, *year));
                }
                name_set(names) != name_set(prev_names)
            }
        };
        rows.push(ChangeRow::unexplained(*year, names.clone(), changed));
    }
    Ok(Detection { rows, gaps })
}

/// Parsed reply to the change-explanation prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeAnswer {
    pub reason: ReasonClass,
    pub reason_text: String,
    pub linkage: LinkageClass,
    pub linkage_text: String,
    pub mapping: Vec<SegmentLink>,
    pub evidence: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChangeAnswerError {
    #[error("missing {0} line")]
    MissingField(&'static str),
    #[error("reason {0:?} is not one of the allowed keywords")]
    UnknownReason(String),
    #[error("linkage {0:?} is not one of the allowed keywords")]
    UnknownLinkage(String),
    #[error("mapping entry {0:?} is not of the form `prior -> current`")]
    BadMapping(String),
    #[error("mapping names {0:?}, which is not a segment of the adjacent years")]
    UnknownSegment(String),
}

pub const NEW_MARKER: &str = "(new)";
pub const DISCONTINUED_MARKER: &str = "(discontinued)";

/// Parses `REASON:`, `REASON_TEXT:`, `LINKAGE:`, `LINKAGE_TEXT:`, `MAPPING:`
/// and `EVIDENCE:` lines. Mapping names are resolved against the prior and
/// current segment lists (abbreviations allowed) and stored in full.
pub fn parse_change_answer(raw: &str, prior: &[String], current: &[String]) -> Result<ChangeAnswer, ChangeAnswerError> {
    let mut fields: [Option<&str>; 6] = [None; 6];
    const KEYS: [&str; 6] = ["REASON_TEXT", "REASON", "LINKAGE_TEXT", "LINKAGE", "MAPPING", "EVIDENCE"];
    for line in raw.lines() {
        let line = line.trim();
        for (slot, key) in KEYS.iter().enumerate() {
            if let Some(rest) = strip_key(line, key) {
                if fields[slot].is_none() {
                    fields[slot] = Some(rest);
                }
                break;
            }
        }
    }
    let [reason_text, reason, linkage_text, linkage, mapping, evidence] = fields;
    let reason_raw = reason.ok_or(ChangeAnswerError::MissingField("REASON"))?;
    let reason = ReasonClass::from_keyword(reason_raw)
        .ok_or_else(|| ChangeAnswerError::UnknownReason(reason_raw.to_string()))?;
    let linkage_raw = linkage.ok_or(ChangeAnswerError::MissingField("LINKAGE"))?;
    let linkage = LinkageClass::from_keyword(linkage_raw)
        .ok_or_else(|| ChangeAnswerError::UnknownLinkage(linkage_raw.to_string()))?;
    let mapping = parse_mapping(mapping.unwrap_or(""), prior, current)?;
    let evidence = evidence
        .unwrap_or("")
        .split([';', ','])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(ToString::to_string)
        .collect();
    Ok(ChangeAnswer {
        reason,
        reason_text: collapse_whitespace(reason_text.unwrap_or("")),
        linkage,
        linkage_text: collapse_whitespace(linkage_text.unwrap_or("")),
        mapping,
        evidence,
    })
}

fn strip_key<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let head = line.get(..key.len())?;
    if !head.eq_ignore_ascii_case(key) {
        return None;
    }
    line[key.len()..].trim_start().strip_prefix(':').map(str::trim)
}

fn parse_mapping(raw: &str, prior: &[String], current: &[String]) -> Result<Vec<SegmentLink>, ChangeAnswerError> {
    let mut links = Vec::new();
    for entry in raw.split(';').map(str::trim).filter(|e| !e.is_empty()) {
        let (lhs, rhs) = entry
            .split_once("->")
            .ok_or_else(|| ChangeAnswerError::BadMapping(entry.to_string()))?;
        let mut from = Vec::new();
        let lhs = lhs.trim();
        if !lhs.eq_ignore_ascii_case(NEW_MARKER) {
            for part in lhs.split('+').map(str::trim).filter(|p| !p.is_empty()) {
                let name = resolve_name(part, prior)
                    .ok_or_else(|| ChangeAnswerError::UnknownSegment(part.to_string()))?;
                from.push(name.to_string());
            }
        }
        let rhs = rhs.trim();
        let to = if rhs.eq_ignore_ascii_case(DISCONTINUED_MARKER) {
            None
        } else {
            Some(
                resolve_name(rhs, current)
                    .ok_or_else(|| ChangeAnswerError::UnknownSegment(rhs.to_string()))?
                    .to_string(),
            )
        };
        if from.is_empty() && to.is_none() {
            return Err(ChangeAnswerError::BadMapping(entry.to_string()));
        }
        links.push(SegmentLink { prior: from, current: to });
    }
    Ok(links)
}
