//! Filing identity and the 10-K item catalog.

use alloc::string::{String, ToString};
use core::fmt;

use serde::{Deserialize, Serialize};

/// First fiscal year for which 10-K filings are broadly available on EDGAR.
pub const EARLIEST_FISCAL_YEAR: i32 = 1993;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilingRef {
    pub cik: u64,
    pub fiscal_year: i32,
    pub accession_number: String,
    pub document_url: String,
    /// Unix seconds. Excluded from determinism comparisons.
    pub fetched_at: u64,
    /// Form type as listed in the index (`10-K`, `10-K405`, `10-K/A`).
    #[serde(default = "default_form")]
    pub form: String,
    /// True when no original 10-K existed and an amendment was used instead.
    #[serde(default)]
    pub amended: bool,
}

fn default_form() -> String {
    "10-K".to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FilingRefError {
    #[error("CIK must be positive")]
    ZeroCik,
    #[error("fiscal year {year} outside [{EARLIEST_FISCAL_YEAR}, {current}]")]
    YearOutOfRange { year: i32, current: i32 },
    #[error("malformed accession number {0:?} (expected ##########-##-######)")]
    Accession(String),
}

impl FilingRef {
    pub fn validate(&self, current_year: i32) -> Result<(), FilingRefError> {
        validate_cik(self.cik)?;
        validate_fiscal_year(self.fiscal_year, current_year)?;
        if !is_accession_number(&self.accession_number) {
            return Err(FilingRefError::Accession(self.accession_number.clone()));
        }
        Ok(())
    }

    /// Accession number without dashes, as used in archive paths.
    pub fn accession_compact(&self) -> String {
        self.accession_number.chars().filter(|c| *c != '-').collect()
    }

    /// Name of the primary document (last URL path segment).
    pub fn primary_document(&self) -> &str {
        self.document_url.rsplit('/').next().unwrap_or(&self.document_url)
    }
}

pub fn validate_cik(cik: u64) -> Result<(), FilingRefError> {
    if cik == 0 {
        Err(FilingRefError::ZeroCik)
    } else {
        Ok(())
    }
}

pub fn validate_fiscal_year(year: i32, current_year: i32) -> Result<(), FilingRefError> {
    if year < EARLIEST_FISCAL_YEAR || year > current_year {
        Err(FilingRefError::YearOutOfRange { year, current: current_year })
    } else {
        Ok(())
    }
}

/// `##########-##-######`
pub fn is_accession_number(s: &str) -> bool {
    let parts: alloc::vec::Vec<&str> = s.split('-').collect();
    parts.len() == 3
        && [10, 2, 6]
            .iter()
            .zip(&parts)
            .all(|(len, p)| p.len() == *len && p.bytes().all(|b| b.is_ascii_digit()))
}

/// Accepts a compact 18-digit accession and inserts the dashes.
pub fn dashed_accession(s: &str) -> Option<String> {
    if is_accession_number(s) {
        return Some(s.to_string());
    }
    if s.len() == 18 && s.bytes().all(|b| b.is_ascii_digit()) {
        return Some(alloc::format!("{}-{}-{}", &s[..10], &s[10..12], &s[12..]));
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediaKind {
    Html,
    SgmlText,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Part {
    I,
    II,
    III,
    IV,
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Part::I => "I",
            Part::II => "II",
            Part::III => "III",
            Part::IV => "IV",
        })
    }
}

/// Standard Form 10-K items in document order, with the part each belongs to.
pub const ITEM_CATALOG: &[(Part, &str)] = &[
    (Part::I, "1"),
    (Part::I, "1A"),
    (Part::I, "1B"),
    (Part::I, "1C"),
    (Part::I, "2"),
    (Part::I, "3"),
    (Part::I, "4"),
    (Part::II, "5"),
    (Part::II, "6"),
    (Part::II, "7"),
    (Part::II, "7A"),
    (Part::II, "8"),
    (Part::II, "9"),
    (Part::II, "9A"),
    (Part::II, "9B"),
    (Part::II, "9C"),
    (Part::III, "10"),
    (Part::III, "11"),
    (Part::III, "12"),
    (Part::III, "13"),
    (Part::III, "14"),
    (Part::IV, "15"),
    (Part::IV, "16"),
];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ItemId {
    pub part: Part,
    pub item_number: String,
}

impl ItemId {
    /// Looks an item number up in the catalog (case-insensitive).
    pub fn from_number(number: &str) -> Option<ItemId> {
        let upper = number.trim().to_ascii_uppercase();
        ITEM_CATALOG
            .iter()
            .find(|(_, n)| *n == upper)
            .map(|(part, n)| ItemId { part: *part, item_number: n.to_string() })
    }

    /// Position in the catalog; document order.
    pub fn ordinal(&self) -> usize {
        ITEM_CATALOG
            .iter()
            .position(|(_, n)| *n == self.item_number)
            .unwrap_or(usize::MAX)
    }

    /// Short identifier used in chunk ids, e.g. `item7a`.
    pub fn slug(&self) -> String {
        let mut s = String::from("item");
        s.push_str(&self.item_number.to_ascii_lowercase());
        s
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Item {}", self.item_number)
    }
}

/// Where a piece of filing text lives: before the first item heading, or
/// inside a numbered item.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKey {
    FrontMatter,
    Item(ItemId),
}

impl SectionKey {
    pub fn slug(&self) -> String {
        match self {
            SectionKey::FrontMatter => "front".to_string(),
            SectionKey::Item(id) => id.slug(),
        }
    }
}

impl fmt::Display for SectionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SectionKey::FrontMatter => f.write_str("front_matter"),
            SectionKey::Item(id) => id.fmt(f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FilingRef {
        FilingRef {
            cik: 320193,
            fiscal_year: 2024,
            accession_number: "0000320193-24-000123".into(),
            document_url: "https://www.sec.gov/Archives/edgar/data/320193/000032019324000123/aapl-20240928.htm".into(),
            fetched_at: 0,
            form: "10-K".into(),
            amended: false,
        }
    }

    #[test]
    fn valid_ref() {
        let r = sample();
        r.validate(2026).unwrap();
        assert_eq!(r.accession_compact(), "000032019324000123");
        assert_eq!(r.primary_document(), "aapl-20240928.htm");
    }

    #[test]
    fn invariant_violations() {
        let mut r = sample();
        r.fiscal_year = 1980;
        assert!(matches!(r.validate(2026), Err(FilingRefError::YearOutOfRange { .. })));
        let mut r = sample();
        r.accession_number = "0000320193-24-00012".into();
        assert!(r.validate(2026).is_err());
        let mut r = sample();
        r.cik = 0;
        assert_eq!(r.validate(2026), Err(FilingRefError::ZeroCik));
    }

    #[test]
    fn accession_forms() {
        assert_eq!(dashed_accession("000150630718000010").unwrap(), "0001506307-18-000010");
        assert!(dashed_accession("15063071800001").is_none());
    }

    #[test]
    fn catalog_lookup() {
        let id = ItemId::from_number("7a").unwrap();
        assert_eq!(id.part, Part::II);
        assert_eq!(id.item_number, "7A");
        assert!(ItemId::from_number("7").unwrap().ordinal() < id.ordinal());
        assert!(ItemId::from_number("17").is_none());
    }
}
