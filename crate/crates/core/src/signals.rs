//! Lexical location of segment-disclosure regions inside a filing.
//!
//! Regions feed chunk flagging and debugging views only; extraction still
//! hands the model the complete filing.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::document::ParsedFiling;
use crate::filing::SectionKey;
use crate::text::count_ignore_case;

/// Phrases that mark segment disclosures, with their weights.
const SIGNALS: &[(&str, f64)] = &[
    ("segment information", 3.0),
    ("reportable segment", 3.0),
    ("operating segment", 2.0),
    ("asc 280", 3.0),
    ("topic 280", 3.0),
    ("sfas 131", 3.0),
    ("sfas no. 131", 3.0),
    ("statement no. 131", 3.0),
    ("chief operating decision maker", 1.5),
    ("segment", 0.5),
];

/// Paragraphs without a signal that may sit between two signalling
/// paragraphs of the same region (table rows, short captions).
const MAX_GAP_PARAGRAPHS: usize = 2;

/// Score at which confidence reaches ~0.63.
const CONFIDENCE_SCALE: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRegion {
    pub section: SectionKey,
    pub start: usize,
    pub end: usize,
    pub confidence: f64,
}

fn paragraph_score(p: &str) -> f64 {
    let mut score = 0.0;
    for (needle, weight) in SIGNALS {
        let n = count_ignore_case(p, needle);
        if *needle == "segment" {
            // Generic mentions are counted once per paragraph.
            if n > 0 {
                score += weight;
            }
        } else {
            score += weight * n as f64;
        }
    }
    score
}

/// Candidate segment regions ranked by confidence (descending), ties by
/// position. Empty when the filing never mentions segments.
pub fn locate_segment_regions(filing: &ParsedFiling) -> Vec<SegmentRegion> {
    let mut regions = Vec::new();
    for section in filing.sections() {
        let mut current: Option<(usize, usize, f64)> = None;
        let mut gap = 0usize;
        let mut pos = section.start;
        for line in section.text.split_inclusive('\n') {
            let start = pos;
            pos += line.len();
            if line.trim().is_empty() {
                continue;
            }
            let score = paragraph_score(line);
            if score > 0.0 {
                current = match current {
                    Some((s, _, acc)) => Some((s, pos, acc + score)),
                    None => Some((start, pos, score)),
                };
                gap = 0;
            } else if let Some(cur) = current {
                gap += 1;
                if gap > MAX_GAP_PARAGRAPHS {
                    regions.push(region(section.key.clone(), cur));
                    current = None;
                    gap = 0;
                }
            }
        }
        if let Some(cur) = current {
            regions.push(region(section.key.clone(), cur));
        }
    }
    regions.sort_by(|a, b| {
        b.confidence
            .partial_cmp(&a.confidence)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.start.cmp(&b.start))
    });
    regions
}

fn region(section: SectionKey, (start, end, score): (usize, usize, f64)) -> SegmentRegion {
    SegmentRegion { section, start, end, confidence: 1.0 - libm::exp(-score / CONFIDENCE_SCALE) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::HeadingCandidate;
    use crate::filing::FilingRef;
    use alloc::string::ToString;

    fn filing(text: &str) -> ParsedFiling {
        let mut heads = Vec::new();
        let mut pos = 0;
        for line in text.split_inclusive('\n') {
            heads.push(HeadingCandidate { start: pos, end: pos + line.trim_end().len(), emphasized: false });
            pos += line.len();
        }
        let r = FilingRef {
            cik: 1,
            fiscal_year: 2024,
            accession_number: "0000000001-24-000001".into(),
            document_url: "a.htm".into(),
            fetched_at: 0,
            form: "10-K".into(),
            amended: false,
        };
        ParsedFiling::assemble(r, text.to_string(), heads, Vec::new())
    }

    #[test]
    fn no_signal_no_regions() {
        let f = filing("Item 1. Business\nWe sell widgets.\nItem 8. Financial Statements\nRevenue grew.\n");
        assert!(locate_segment_regions(&f).is_empty());
    }

    #[test]
    fn strongest_region_first() {
        let f = filing(
            "Item 1. Business\nWe have one segment.\nItem 8. Financial Statements\nNote 13 - Segment Information\nThe Company has two reportable segments under ASC 280.\nRevenue by reportable segment follows.\n",
        );
        let regions = locate_segment_regions(&f);
        assert_eq!(regions.len(), 2);
        assert_eq!(regions[0].section.slug(), "item8");
        assert!(regions[0].confidence > regions[1].confidence);
        assert!(regions.iter().all(|r| (0.0..=1.0).contains(&r.confidence)));
    }
}
