//! Normalized filing text: sections keyed by 10-K item, lifted tables and
//! the heading candidates used to itemize.
//!
//! Offsets are byte offsets into the full extracted text, which is the
//! concatenation of `front_matter` and every item section in order.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::filing::{FilingRef, ItemId, SectionKey};
use crate::money::{Decimal, Scale};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub key: SectionKey,
    pub start: usize,
    pub end: usize,
    /// The heading line that opened the section (empty for front matter).
    pub heading: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumericCell {
    pub row: usize,
    pub col: usize,
    pub value: Decimal,
    pub scale: Scale,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedTable {
    pub table_id: String,
    /// Section the table falls inside; `None` means unassigned.
    pub section: Option<SectionKey>,
    /// Byte offset of the table's rendering in the full text.
    pub start: usize,
    pub caption_text: String,
    pub header_rows: Vec<Vec<String>>,
    pub body_rows: Vec<Vec<String>>,
    pub numeric_cells: Vec<NumericCell>,
    /// Scale resolved from a caption ("in millions"); `false` means the
    /// units default was applied.
    pub scale_from_caption: bool,
}

impl NormalizedTable {
    pub fn column_count(&self) -> usize {
        self.header_rows
            .iter()
            .chain(self.body_rows.iter())
            .map(Vec::len)
            .max()
            .unwrap_or(0)
    }
}

/// A short or emphasized line outside any table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadingCandidate {
    pub start: usize,
    pub end: usize,
    pub emphasized: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedFiling {
    #[serde(rename = "ref")]
    pub filing: FilingRef,
    pub front_matter: Section,
    pub items: Vec<Section>,
    pub tables: Vec<NormalizedTable>,
    pub char_count: usize,
    pub headings: Vec<HeadingCandidate>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ItemizeError {
    #[error("no 10-K item headings found")]
    NoItemsFound,
    #[error("document is empty")]
    Empty,
}

const MAX_HEADING_CHARS: usize = 160;

impl ParsedFiling {
    /// Assembles a filing from extracted text, splitting it into items. A
    /// filing with no recognizable item headings keeps everything in
    /// `front_matter` and records a warning.
    pub fn assemble(
        filing: FilingRef,
        text: String,
        headings: Vec<HeadingCandidate>,
        mut tables: Vec<NormalizedTable>,
    ) -> ParsedFiling {
        let char_count = text.chars().count();
        let mut warnings = Vec::new();
        let bounds = match item_boundaries(&text, &headings) {
            Ok(b) => b,
            Err(e) => {
                warnings.push(alloc::format!("{e}; whole document kept as front matter"));
                Vec::new()
            }
        };
        let (front_matter, items) = split_sections(&text, &bounds);
        for t in &mut tables {
            t.section = section_key_at(&front_matter, &items, t.start);
        }
        ParsedFiling { filing, front_matter, items, tables, char_count, headings, warnings }
    }

    /// Full extracted text: front matter followed by every item section.
    pub fn text(&self) -> String {
        let mut s = String::with_capacity(self.front_matter.text.len());
        s.push_str(&self.front_matter.text);
        for item in &self.items {
            s.push_str(&item.text);
        }
        s
    }

    pub fn sections(&self) -> impl Iterator<Item = &Section> {
        core::iter::once(&self.front_matter).chain(self.items.iter())
    }

    pub fn section(&self, id: &ItemId) -> Option<&Section> {
        self.items.iter().find(|s| matches!(&s.key, SectionKey::Item(i) if i == id))
    }

    pub fn section_containing(&self, offset: usize) -> Option<&Section> {
        self.sections().find(|s| s.start <= offset && offset < s.end)
    }

    /// Re-derives the item map from the stored text and heading candidates.
    pub fn itemize(&self) -> Result<Vec<(SectionKey, Range<usize>)>, ItemizeError> {
        let text = self.text();
        if text.trim().is_empty() {
            return Err(ItemizeError::Empty);
        }
        let bounds = item_boundaries(&text, &self.headings)?;
        let (front, items) = split_sections(&text, &bounds);
        let mut out = Vec::with_capacity(items.len() + 1);
        if front.end > front.start {
            out.push((SectionKey::FrontMatter, front.start..front.end));
        }
        out.extend(items.into_iter().map(|s| (s.key, s.start..s.end)));
        Ok(out)
    }
}

fn section_key_at(front: &Section, items: &[Section], offset: usize) -> Option<SectionKey> {
    if offset >= front.start && offset < front.end {
        return Some(SectionKey::FrontMatter);
    }
    items
        .iter()
        .find(|s| s.start <= offset && offset < s.end)
        .map(|s| s.key.clone())
}

struct Boundary {
    id: ItemId,
    start: usize,
    heading_end: usize,
}

fn split_sections(text: &str, bounds: &[Boundary]) -> (Section, Vec<Section>) {
    let first = bounds.first().map_or(text.len(), |b| b.start);
    let front = Section {
        key: SectionKey::FrontMatter,
        start: 0,
        end: first,
        heading: String::new(),
        text: text[..first].to_string(),
    };
    let items = bounds
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let end = bounds.get(i + 1).map_or(text.len(), |n| n.start);
            Section {
                key: SectionKey::Item(b.id.clone()),
                start: b.start,
                end,
                heading: text[b.start..b.heading_end].trim().to_string(),
                text: text[b.start..end].to_string(),
            }
        })
        .collect();
    (front, items)
}

fn item_boundaries(text: &str, headings: &[HeadingCandidate]) -> Result<Vec<Boundary>, ItemizeError> {
    let mut bounds: Vec<Boundary> = Vec::new();
    for h in headings {
        let Some(line) = text.get(h.start..h.end) else { continue };
        if !h.emphasized && line.trim().chars().count() > MAX_HEADING_CHARS {
            continue;
        }
        let Some(id) = match_item_heading(line) else { continue };
        if looks_like_toc_entry(line) {
            continue;
        }
        // Repeated running headers and continuation pages never move the
        // item sequence backwards.
        if bounds.last().is_some_and(|b| b.id.ordinal() >= id.ordinal()) {
            continue;
        }
        bounds.push(Boundary { id, start: h.start, heading_end: h.end });
    }
    if bounds.is_empty() {
        Err(ItemizeError::NoItemsFound)
    } else {
        Ok(bounds)
    }
}

/// Recognizes `Item 7A.`, `ITEM 1 - BUSINESS`, `Item 9B:` and similar at the
/// start of a line.
pub fn match_item_heading(line: &str) -> Option<ItemId> {
    let t = line.trim_start_matches(|c: char| c.is_whitespace() || c == '\u{a0}');
    let head = t.get(..4)?;
    if !head.eq_ignore_ascii_case("item") {
        return None;
    }
    let rest = &t[4..];
    let rest = rest.trim_start_matches(|c: char| c.is_whitespace() || c == '\u{a0}');
    if rest.len() == t.len() - 4 && !rest.starts_with(|c: char| c.is_ascii_digit()) {
        return None;
    }
    let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
    if digits.is_empty() || digits.len() > 2 {
        return None;
    }
    let mut number = digits.clone();
    let after = &rest[digits.len()..];
    let mut tail = after;
    if let Some(c) = after.chars().next() {
        if matches!(c.to_ascii_uppercase(), 'A' | 'B' | 'C') {
            let next = after[1..].chars().next();
            if next.is_none_or(|n| !n.is_alphanumeric()) {
                number.push(c.to_ascii_uppercase());
                tail = &after[1..];
            }
        }
    }
    if let Some(c) = tail.chars().next() {
        if c.is_alphanumeric() {
            return None;
        }
    }
    ItemId::from_number(&number)
}

/// Table-of-contents lines end in a page number, often after dot leaders.
fn looks_like_toc_entry(line: &str) -> bool {
    let t = line.trim_end();
    let digits = t.bytes().rev().take_while(|b| b.is_ascii_digit()).count();
    if digits == 0 || digits > 3 || digits == t.len() {
        return false;
    }
    let before = &t[..t.len() - digits];
    let leader = before.ends_with("..") || before.ends_with('\t');
    let spaced = before.ends_with(' ') && match_item_heading(before).is_some() && {
        // "Item 7A" alone is not a page reference; require a title.
        before.split_whitespace().count() > 2
    };
    leader || spaced
}

#[cfg(test)]
mod tests {
    use super::*;

    fn headings_for(text: &str) -> Vec<HeadingCandidate> {
        let mut out = Vec::new();
        let mut pos = 0;
        for line in text.split_inclusive('\n') {
            let end = pos + line.trim_end_matches('\n').len();
            out.push(HeadingCandidate { start: pos, end, emphasized: false });
            pos += line.len();
        }
        out
    }

    fn fref() -> FilingRef {
        FilingRef {
            cik: 1,
            fiscal_year: 2020,
            accession_number: "0000000001-20-000001".into(),
            document_url: "x.htm".into(),
            fetched_at: 0,
            form: "10-K".into(),
            amended: false,
        }
    }

    #[test]
    fn heading_variants() {
        assert_eq!(match_item_heading("ITEM 7A. Quantitative and Qualitative Disclosures").unwrap().item_number, "7A");
        assert_eq!(match_item_heading("Item 1. Business").unwrap().item_number, "1");
        assert_eq!(match_item_heading("item 9b: Other Information").unwrap().item_number, "9B");
        assert_eq!(match_item_heading("Item\u{a0}8 - Financial Statements").unwrap().item_number, "8");
        assert_eq!(match_item_heading("Item 1Business").map(|i| i.item_number), None);
        assert!(match_item_heading("Items 1 and 2").is_none());
        assert!(match_item_heading("Item 17. Exhibits").is_none());
        assert!(match_item_heading("See Item 8").is_none());
    }

    #[test]
    fn single_heading_document() {
        let text = "Item 1. Business\nWe make things.\n".to_string();
        let pf = ParsedFiling::assemble(fref(), text.clone(), headings_for(&text), Vec::new());
        assert_eq!(pf.items.len(), 1);
        assert_eq!(pf.itemize().unwrap().len(), 1);
        assert_eq!(pf.text(), text);
    }

    #[test]
    fn toc_and_running_headers_are_skipped() {
        let text = "Cover\nItem 1. Business 3\nItem 7. MD&A 20\nPART I\nItem 1. Business\nbody\nItem 1. Business\nmore\nItem 7. Management's Discussion\nmdna\nITEM 7A. Quantitative and Qualitative Disclosures\nx\n".to_string();
        let pf = ParsedFiling::assemble(fref(), text.clone(), headings_for(&text), Vec::new());
        let keys: Vec<String> = pf.items.iter().map(|s| s.key.slug()).collect();
        assert_eq!(keys, ["item1", "item7", "item7a"]);
        assert!(pf.front_matter.text.contains("Business 3"));
        assert_eq!(pf.text(), text);
    }

    #[test]
    fn no_items_keeps_front_matter() {
        let text = "Just a letter\nno headings\n".to_string();
        let pf = ParsedFiling::assemble(fref(), text.clone(), headings_for(&text), Vec::new());
        assert!(pf.items.is_empty());
        assert_eq!(pf.front_matter.text, text);
        assert_eq!(pf.itemize(), Err(ItemizeError::NoItemsFound));
        assert_eq!(pf.warnings.len(), 1);
    }
}
